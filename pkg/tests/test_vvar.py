import itertools

import numpy as np
import pytest

from conftest import DEMO_ADDRESS, random_vvar_code
from vvcodec import metrics, vvar
from vvcodec.clustering import ClusterOptions, kmeans
from vvcodec.imaging import FormatError, PixelImage


def all_addresses(depth):
    return itertools.product((1, 2, 3, 4), repeat=depth)


class TestComputeN0:
    @pytest.mark.parametrize("v,n0", [(1, 0), (4, 1), (5, 1), (15, 1), (16, 2), (256, 4), (1023, 4), (1024, 5)])
    def test_values(self, v, n0):
        assert vvar.compute_n0(v, depth=9) == n0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            vvar.compute_n0(0)
        with pytest.raises(ValueError):
            vvar.compute_n0(4 ** 8, depth=9)
        with pytest.raises(ValueError):
            vvar.compute_n0(4, depth=1)


class TestEncodeDecode:
    def test_constant_round_trip(self):
        img = PixelImage.constant(77, depth=4)
        for v in (1, 2, 4, 9):
            code = vvar.encode(img, v, restarts=1)
            assert vvar.decode(code) == img

    def test_v1_decodes_to_rounded_mean(self):
        rng = np.random.default_rng(1)
        img = PixelImage(rng.integers(0, 256, (32, 32)))
        code = vvar.encode(img, 1, restarts=1)
        decoded = vvar.decode(code)
        value = int(np.rint(img.data.mean()))
        assert np.all(decoded.data == value)

    def test_demo_image_lossless_with_distinct_init(self, demo_code, demo_image):
        code = vvar.encode(demo_image, 4, restarts=1, init="distinct")
        assert metrics.mse(demo_image, vvar.decode(code)) == 0.0

    def test_encode_deterministic(self):
        rng = np.random.default_rng(2)
        img = PixelImage(rng.integers(0, 256, (32, 32)))
        a = vvar.encode(img, 6, seed=3)
        b = vvar.encode(img, 6, seed=3)
        assert a == b

    def test_v_variability_of_random_encodes(self):
        rng = np.random.default_rng(3)
        for v in (3, 4, 16):
            img = PixelImage(rng.integers(0, 256, (32, 32)))
            decoded = vvar.decode(vvar.encode(img, v, restarts=1))
            n0 = vvar.compute_n0(v, img.depth)
            for level in range(n0 + 1, img.depth + 1):
                assert vvar.distinct_block_count(decoded, level) <= v

    def test_monotone_capacity_under_seeded_init(self):
        # SSE with V clusters <= SSE with V-1 when the V-run starts from the
        # (V-1)-run's centroids plus the worst-fit point
        rng = np.random.default_rng(4)
        img = PixelImage(rng.integers(0, 256, (32, 32)))
        from vvcodec.imaging import blocks_at_level

        points = blocks_at_level(img, 2)
        v = 7
        small = kmeans(points, ClusterOptions(k=v - 1, seed=0, restarts=3))
        dists = ((points - small.centroids[small.labels - 1]) ** 2).sum(axis=1)
        extra = points[int(np.argmax(dists))]
        seeded = kmeans(
            points,
            ClusterOptions(k=v),
            initial_centroids=np.vstack([small.centroids, extra]),
        )
        assert seeded.sse <= small.sse * (1 + 1e-12) + 1e-9


class TestDemoMatrix:
    def test_walkthrough_pixel(self, demo_code):
        assert vvar.pixel_value(demo_code, DEMO_ADDRESS) == 138

    def test_all_ones_address(self, demo_code):
        assert vvar.pixel_value(demo_code, (1,) * 9) == 33

    def test_decode_agrees_with_trace_on_random_addresses(
        self, demo_code, demo_image
    ):
        rng = np.random.default_rng(5)
        addrs = rng.integers(1, 5, size=(1000, 9))
        for addr in addrs:
            addr = tuple(int(d) for d in addr)
            row = col = 0
            for d in addr:
                row = 2 * row + (1, 0, 1, 0)[d - 1]
                col = 2 * col + (0, 0, 1, 1)[d - 1]
            assert vvar.pixel_value(demo_code, addr) == demo_image.data[row, col]

    def test_leaf_level_values(self, demo_image):
        assert vvar.distinct_block_count(demo_image, 9) == 4
        assert set(np.unique(demo_image.data).tolist()) == {33, 37, 138, 171}

    def test_distinct_blocks_bounded(self, demo_image):
        for level in range(10):
            bound = min(4 ** level, 4)
            assert vvar.distinct_block_count(demo_image, level) <= bound


class TestPixelValue:
    def test_constant_code(self):
        code = vvar.encode(PixelImage.constant(200, depth=3), 1, restarts=1)
        for addr in all_addresses(3):
            assert vvar.pixel_value(code, addr) == 200

    def test_wrong_length(self, demo_code):
        with pytest.raises(ValueError):
            vvar.pixel_value(demo_code, (1, 2, 3))

    def test_matches_decode_exhaustively_small_depth(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            code = random_vvar_code(rng, v=int(rng.integers(1, 30)))
            if code.depth > 5:
                continue
            img = vvar.decode(code)
            for addr in all_addresses(code.depth):
                row = col = 0
                for d in addr:
                    row = 2 * row + (1, 0, 1, 0)[d - 1]
                    col = 2 * col + (0, 0, 1, 1)[d - 1]
                assert vvar.pixel_value(code, addr) == img.data[row, col]


class TestPayloadSize:
    @pytest.mark.parametrize(
        "v,want",
        [(1, 1), (4, 44), (16, 256), (64, 1216), (256, 5120), (1024, 19456)],
    )
    def test_published_sizes(self, v, want):
        assert vvar.payload_size(v, depth=9) == want

    def test_non_power_of_four(self):
        # v=5: n0=1, 16 + 20*(d-3) labels at 3 bits, plus 20 leaf bytes
        labels = 16 + 20 * 4
        assert vvar.payload_size(5, depth=7) == (labels * 3 + 7) // 8 + 20

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            vvar.payload_size(0)
        with pytest.raises(ValueError):
            vvar.payload_size(4 ** 8, depth=9)


class TestSerialization:
    def test_header_plus_payload_length(self):
        rng = np.random.default_rng(7)
        code = random_vvar_code(rng, v=1024)
        blob = vvar.serialize(code)
        assert len(blob) == 10 + vvar.payload_size(1024, code.depth)

    def test_v1_single_byte(self):
        code = vvar.VVarCode(
            depth=9,
            v=1,
            first_labels=np.ones(4, np.int32),
            level_labels=[np.ones(4, np.int32) for _ in range(7)],
            leaf_values=np.full(4, 138, np.uint8),
        )
        blob = vvar.serialize(code)
        assert len(blob) == 11
        assert blob[10] == 0x8A
        assert vvar.deserialize(blob) == code

    def test_round_trip_random_codes(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            code = random_vvar_code(rng)
            blob = vvar.serialize(code)
            assert vvar.deserialize(blob) == code
            assert len(blob) - 10 == vvar.payload_size(code.v, code.depth)

    def test_bad_magic(self):
        with pytest.raises(FormatError):
            vvar.deserialize(b"XXXX" + bytes(20))

    def test_bad_version(self):
        blob = bytearray(vvar.serialize(random_vvar_code(np.random.default_rng(9))))
        blob[4] = 2
        with pytest.raises(FormatError):
            vvar.deserialize(bytes(blob))

    def test_truncated(self):
        blob = vvar.serialize(random_vvar_code(np.random.default_rng(10)))
        with pytest.raises(FormatError):
            vvar.deserialize(blob[:-1])

    def test_label_out_of_range_detected(self):
        # v=3 packs labels in 2 bits; the raw value 3 would mean label 4
        code = vvar.VVarCode(
            depth=2,
            v=3,
            first_labels=np.array([1, 2, 3, 1], np.int32),
            level_labels=[],
            leaf_values=np.arange(12, dtype=np.uint8),
        )
        blob = bytearray(vvar.serialize(code))
        blob[10] |= 0xC0  # force the first packed label to raw value 3
        with pytest.raises(FormatError):
            vvar.deserialize(bytes(blob))

    def test_nonzero_padding_detected(self):
        code = vvar.VVarCode(
            depth=2,
            v=2,
            first_labels=np.array([1, 2, 2, 1], np.int32),
            level_labels=[],
            leaf_values=np.arange(8, dtype=np.uint8),
        )
        blob = bytearray(vvar.serialize(code))
        blob[10] |= 0x0F  # four labels occupy the top nibble; pad must be 0
        with pytest.raises(FormatError):
            vvar.deserialize(bytes(blob))


class TestDistinctBlockCount:
    def test_constant(self):
        img = PixelImage.constant(5, depth=4)
        for level in range(5):
            assert vvar.distinct_block_count(img, level) == 1

    def test_level_out_of_range(self):
        with pytest.raises(ValueError):
            vvar.distinct_block_count(PixelImage.constant(0, depth=2), 3)


class TestCodeFromMatrix:
    def test_rejects_non_power_of_four(self):
        with pytest.raises(ValueError):
            vvar.code_from_matrix(np.ones((8, 3), dtype=np.int64))

    def test_rejects_bad_labels(self):
        bad = np.ones((4, 3), dtype=np.int64)
        bad[0, 0] = 2  # v=1 admits only label 1
        with pytest.raises(ValueError):
            vvar.code_from_matrix(bad)

    def test_single_type_matrix(self):
        matrix = np.ones((4, 4), dtype=np.int64)
        matrix[:, -1] = 99
        code = vvar.code_from_matrix(matrix)
        assert code.depth == 4 and code.v == 1
        assert vvar.decode(code) == PixelImage.constant(99, depth=4)
