"""Fractal block coding baseline: affine cross-scale block matching.

Each small (range) block is approximated by alpha * downsample(LB) + beta
over all large (domain) blocks, with the least-squares alpha clamped to
[-1, 1] and quantized to 16 uniform levels (step 2/15, endpoints included),
and beta re-fit after alpha quantization, rounded to an integer in -255..255.
Decoding iterates the block transform from a flat start image. No block
isometries are used; a code entry is (large block index, q_alpha, q_beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitpack import BitReader, BitWriter
from .imaging import FormatError, PixelImage

ALPHA_BITS = 4
BETA_BITS = 9
_VAR_EPS = 1e-6  # guards alpha against roundoff on constant domain blocks

MAGIC = b"FBC1"
VERSION = 1
HEADER_BYTES = 7


@dataclass(frozen=True)
class FbcParams:
    """Geometry and decode schedule; large blocks are twice the small side."""

    small_size: int
    decode_iterations: int = 10

    def __post_init__(self) -> None:
        s = self.small_size
        if s < 2 or s & (s - 1):
            raise ValueError(f"small block size {s} is not a power of two >= 2")
        if self.decode_iterations < 1:
            raise ValueError("decode_iterations must be >= 1")

    @property
    def large_size(self) -> int:
        return 2 * self.small_size

    def check_side(self, side: int) -> None:
        if side % self.small_size or side % self.large_size:
            raise ValueError(
                f"block sizes {self.small_size}/{self.large_size} do not "
                f"divide image side {side}"
            )


@dataclass
class FbcCode:
    """One (large_index, q_alpha, q_beta) entry per small block, row-major."""

    depth: int
    small_size: int
    entries: np.ndarray  # (n_small, 3) int32

    @property
    def n_small(self) -> int:
        return (2 ** self.depth // self.small_size) ** 2

    @property
    def n_large(self) -> int:
        return (2 ** self.depth // (2 * self.small_size)) ** 2

    def validate(self) -> None:
        FbcParams(self.small_size).check_side(2 ** self.depth)
        e = np.asarray(self.entries)
        if e.shape != (self.n_small, 3):
            raise FormatError(
                f"expected {self.n_small} entries of 3 fields, got {e.shape}"
            )
        if e[:, 0].min() < 0 or e[:, 0].max() >= self.n_large:
            raise FormatError("large block index out of range")
        if e[:, 1].min() < 0 or e[:, 1].max() > 15:
            raise FormatError("quantized alpha out of range 0..15")
        if e[:, 2].min() < 0 or e[:, 2].max() > 510:
            raise FormatError("quantized beta out of range 0..510")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FbcCode):
            return NotImplemented
        return (
            self.depth == other.depth
            and self.small_size == other.small_size
            and np.array_equal(self.entries, other.entries)
        )


def alpha_value(q_alpha: np.ndarray | int) -> np.ndarray | float:
    """Dequantize: level q in 0..15 maps to -1 + q * 2/15."""
    return np.asarray(q_alpha, dtype=np.float64) / 7.5 - 1.0


def quantize_alpha(alpha: np.ndarray) -> np.ndarray:
    """Nearest of the 16 uniform levels on [-1, 1] after clamping."""
    clamped = np.clip(alpha, -1.0, 1.0)
    return np.rint((clamped + 1.0) * 7.5).astype(np.int64)


def _grid_blocks(plane: np.ndarray, size: int) -> np.ndarray:
    """Cut a plane into (n, size*size) rows of non-overlapping blocks,
    row-major scan order."""
    g = plane.shape[0] // size
    return (
        plane.reshape(g, size, g, size)
        .transpose(0, 2, 1, 3)
        .reshape(g * g, size * size)
    )


def _downsample_plane(plane: np.ndarray) -> np.ndarray:
    return 0.25 * (
        plane[0::2, 0::2]
        + plane[0::2, 1::2]
        + plane[1::2, 0::2]
        + plane[1::2, 1::2]
    )


def fbc_encode(img: PixelImage, params: FbcParams) -> FbcCode:
    """Find the best (large block, alpha, beta) triple for every small block.

    The error minimized is the squared norm of SB - (alpha_q * L + beta_q)
    with both parameters already quantized; ties go to the lowest large
    block index.
    """
    params.check_side(img.side)
    s = params.small_size
    n = s * s
    plane = img.data.astype(np.float64)
    small = _grid_blocks(plane, s)
    large = _grid_blocks(_downsample_plane(plane), s)

    sum_s = small.sum(axis=1)
    sum_s2 = np.einsum("ij,ij->i", small, small)
    sum_l = large.sum(axis=1)
    sum_l2 = np.einsum("ij,ij->i", large, large)
    var_l = sum_l2 - sum_l * sum_l / n  # n * variance

    n_small = small.shape[0]
    n_large = large.shape[0]
    entries = np.empty((n_small, 3), dtype=np.int32)
    batch = max(1, (1 << 22) // max(1, n_large))
    for start in range(0, n_small, batch):
        stop = min(start + batch, n_small)
        sb = small[start:stop]
        cross = sb @ large.T  # (b, n_large)
        cov = cross - np.outer(sum_s[start:stop], sum_l) / n
        alpha = np.where(var_l > _VAR_EPS, cov / np.maximum(var_l, _VAR_EPS), 0.0)
        q_alpha = quantize_alpha(alpha)
        aq = alpha_value(q_alpha)
        beta = sum_s[start:stop, None] / n - aq * (sum_l[None, :] / n)
        b_int = np.clip(np.rint(beta), -255, 255)
        err = (
            sum_s2[start:stop, None]
            + aq * aq * sum_l2[None, :]
            + n * b_int * b_int
            - 2.0 * aq * cross
            - 2.0 * b_int * sum_s[start:stop, None]
            + 2.0 * aq * b_int * sum_l[None, :]
        )
        best = err.argmin(axis=1)
        rows = np.arange(stop - start)
        entries[start:stop, 0] = best
        entries[start:stop, 1] = q_alpha[rows, best]
        entries[start:stop, 2] = b_int[rows, best].astype(np.int64) + 255
    return FbcCode(img.depth, s, entries)


def apply_block_transform(code: FbcCode, plane: np.ndarray) -> np.ndarray:
    """One real-valued decoder pass: every small block becomes
    alpha * downsample(its large block) + beta, taken from `plane`."""
    side = 2 ** code.depth
    s = code.small_size
    gs = side // s
    idx = code.entries[:, 0]
    alpha = alpha_value(code.entries[:, 1])
    beta = code.entries[:, 2].astype(np.float64) - 255.0
    domains = _grid_blocks(_downsample_plane(plane), s)
    blocks = alpha[:, None] * domains[idx] + beta[:, None]
    return (
        blocks.reshape(gs, gs, s, s).transpose(0, 2, 1, 3).reshape(side, side)
    )


def fbc_decode(
    code: FbcCode,
    params: FbcParams | None = None,
    init: PixelImage | float = 128.0,
) -> PixelImage:
    """Iterate the block transform from `init` (default flat 128).

    Arithmetic stays real-valued across passes; rounding and clamping to
    0..255 happen once at the end.
    """
    code.validate()
    if params is None:
        params = FbcParams(code.small_size)
    if params.small_size != code.small_size:
        raise ValueError("params.small_size does not match the code")
    side = 2 ** code.depth
    if isinstance(init, PixelImage):
        if init.depth != code.depth:
            raise ValueError("init image depth does not match the code")
        current = init.data.astype(np.float64)
    else:
        current = np.full((side, side), float(init))
    for _ in range(params.decode_iterations):
        current = apply_block_transform(code, current)
    return PixelImage.from_real(current)


def index_bits(n_large: int) -> int:
    return (n_large - 1).bit_length()


def fbc_payload_bits(code: FbcCode) -> int:
    """Payload size in bits: one (index, alpha, beta) triple per entry."""
    code.validate()
    return len(code.entries) * (ALPHA_BITS + BETA_BITS + index_bits(code.n_large))


def serialize(code: FbcCode) -> bytes:
    """Pack into the FBC1 container.

    Layout: magic "FBC1", version byte 0x01, depth byte, small size byte,
    then the entries bit-packed MSB-first (index at ceil(log2 n_large) bits,
    alpha 4 bits, beta 9 bits), zero-padded to a byte boundary.
    """
    code.validate()
    if code.small_size > 255:
        raise ValueError("FBC1 stores the small block size in one byte")
    header = MAGIC + bytes([VERSION, code.depth, code.small_size])
    ibits = index_bits(code.n_large)
    writer = BitWriter()
    for large_index, q_alpha, q_beta in code.entries:
        writer.write(int(large_index), ibits)
        writer.write(int(q_alpha), ALPHA_BITS)
        writer.write(int(q_beta), BETA_BITS)
    return header + writer.getvalue()


def deserialize(data: bytes) -> FbcCode:
    """Exact inverse of serialize."""
    if len(data) < HEADER_BYTES:
        raise FormatError("stream shorter than FBC1 header")
    if data[:4] != MAGIC:
        raise FormatError("bad magic (not an FBC1 stream)")
    if data[4] != VERSION:
        raise FormatError(f"unsupported FBC1 version {data[4]}")
    depth, s = data[5], data[6]
    try:
        FbcParams(s).check_side(2 ** depth)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    n_small = (2 ** depth // s) ** 2
    n_large = (2 ** depth // (2 * s)) ** 2
    ibits = index_bits(n_large)
    expected = HEADER_BYTES + (n_small * (ibits + ALPHA_BITS + BETA_BITS) + 7) // 8
    if len(data) != expected:
        raise FormatError(f"stream has {len(data)} bytes, expected {expected}")
    reader = BitReader(data[HEADER_BYTES:])
    entries = np.empty((n_small, 3), dtype=np.int32)
    for i in range(n_small):
        large_index = reader.read(ibits)
        q_alpha = reader.read(ALPHA_BITS)
        q_beta = reader.read(BETA_BITS)
        if large_index >= n_large:
            raise FormatError("large block index out of range")
        if q_beta > 510:
            raise FormatError("quantized beta out of range 0..510")
        entries[i] = (large_index, q_alpha, q_beta)
    reader.align_checked()
    return FbcCode(depth, s, entries)
