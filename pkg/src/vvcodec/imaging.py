"""Grayscale image primitives: PGM I/O, quadrant addressing, block arithmetic.

Images are square with side 2**depth and 8-bit gray values stored row-major,
row 0 at the top. Quadrant digits 1..4 follow the unit-square convention with
y pointing up, so with screen coordinates:

    1 = bottom-left   2 = top-left   3 = bottom-right   4 = top-right

("bottom" means larger row indices). Every module in this package shares this
single digit mapping.

Intermediate block values are real-valued float64 arrays; rounding and
clamping to 0..255 happens only when a PixelImage is produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QuadAddress = tuple[int, ...]

# row/column half offsets per quadrant digit (index digit-1)
_DIGIT_ROW = (1, 0, 1, 0)
_DIGIT_COL = (0, 0, 1, 1)

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")


class FormatError(ValueError):
    """Raised for malformed or corrupt serialized data (PGM/VVC1/FBC1)."""


@dataclass(frozen=True, eq=False)
class PixelImage:
    """Square 2**depth x 2**depth grid of integer gray values in 0..255."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("image data must be a square 2-D array")
        side = arr.shape[0]
        if side < 1 or side & (side - 1):
            raise ValueError(f"image side {side} is not a power of two")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError("pixel values must be integers")
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("pixel values must lie in 0..255")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", arr)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    @property
    def depth(self) -> int:
        return self.side.bit_length() - 1

    @classmethod
    def constant(cls, value: int, depth: int = 9) -> "PixelImage":
        if not 0 <= value <= 255:
            raise ValueError("constant value must lie in 0..255")
        side = 2 ** depth
        return cls(np.full((side, side), value, dtype=np.uint8))

    @classmethod
    def from_real(cls, values: np.ndarray) -> "PixelImage":
        """Round to nearest and clamp a real-valued array into an image."""
        return cls(np.clip(np.rint(values), 0, 255).astype(np.uint8))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PixelImage):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(
            self.data, other.data
        )

    __hash__ = None  # type: ignore[assignment]


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#' comment runs to end of line
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header")
    return data[start:pos], pos


def load_pgm(data: bytes) -> PixelImage:
    """Parse a binary PGM (P5) byte stream into a PixelImage.

    The image must be square with a power-of-two side and maxval 255.
    Header comments are accepted.
    """
    magic, pos = _next_token(data, 0)
    if magic != b"P5":
        raise FormatError("not a binary PGM (P5) stream")
    fields = []
    for _ in range(3):
        token, pos = _next_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise FormatError(f"bad PGM header field {token!r}") from None
    width, height, maxval = fields
    if width != height:
        raise FormatError(f"image is {width}x{height}, not square")
    if width < 1 or width & (width - 1):
        raise FormatError(f"image side {width} is not a power of two")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} (need 255)")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError("missing whitespace before PGM raster")
    raster = data[pos + 1:]
    if len(raster) != width * height:
        raise FormatError(
            f"PGM raster has {len(raster)} bytes, expected {width * height}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return PixelImage(pixels.copy())


def save_pgm(img: PixelImage) -> bytes:
    """Serialize to binary PGM (P5), single-whitespace header, no comments."""
    header = f"P5 {img.side} {img.side} 255\n".encode("ascii")
    return header + img.data.tobytes()


def _check_address(addr: QuadAddress, depth: int) -> None:
    if len(addr) > depth:
        raise ValueError(f"address length {len(addr)} exceeds depth {depth}")
    for d in addr:
        if d not in (1, 2, 3, 4):
            raise ValueError(f"quadrant digit {d} not in 1..4")


def extract_block(img: PixelImage, addr: QuadAddress) -> np.ndarray:
    """Return the sub-block selected by successive quadrant digits.

    The result is a real-valued (float64) square array of side
    2**(depth - len(addr)).
    """
    _check_address(addr, img.depth)
    row = col = 0
    side = img.side
    for d in addr:
        side //= 2
        row += _DIGIT_ROW[d - 1] * side
        col += _DIGIT_COL[d - 1] * side
    return img.data[row:row + side, col:col + side].astype(np.float64)


def split_quadrants(block: np.ndarray) -> tuple[np.ndarray, ...]:
    """Split a block into its four quadrants in digit order 1..4."""
    block = np.asarray(block, dtype=np.float64)
    side = block.shape[0]
    if block.ndim != 2 or block.shape[1] != side:
        raise ValueError("block must be square")
    if side < 2 or side % 2:
        raise ValueError(f"cannot split a block of side {side}")
    h = side // 2
    return (
        block[h:, :h].copy(),  # 1 bottom-left
        block[:h, :h].copy(),  # 2 top-left
        block[h:, h:].copy(),  # 3 bottom-right
        block[:h, h:].copy(),  # 4 top-right
    )


def tile_blocks(children: tuple[np.ndarray, ...]) -> np.ndarray:
    """Inverse of split_quadrants: assemble four equal-sided quadrants."""
    if len(children) != 4:
        raise ValueError("need exactly four quadrants")
    q1, q2, q3, q4 = (np.asarray(c, dtype=np.float64) for c in children)
    h = q1.shape[0]
    for q in (q1, q2, q3, q4):
        if q.shape != (h, h):
            raise ValueError("quadrants must all be square with equal side")
    out = np.empty((2 * h, 2 * h), dtype=np.float64)
    out[h:, :h] = q1
    out[:h, :h] = q2
    out[h:, h:] = q3
    out[:h, h:] = q4
    return out


def downsample2x(block: np.ndarray) -> np.ndarray:
    """Halve a block's side, each output value the mean of a 2x2 cell."""
    block = np.asarray(block, dtype=np.float64)
    side = block.shape[0]
    if block.ndim != 2 or block.shape[1] != side:
        raise ValueError("block must be square")
    if side < 2 or side % 2:
        raise ValueError(f"cannot downsample a block of side {side}")
    return 0.25 * (
        block[0::2, 0::2]
        + block[0::2, 1::2]
        + block[1::2, 0::2]
        + block[1::2, 1::2]
    )


def address_grid_coords(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid (row, col) of every level-`level` block, in address-lexicographic
    order.

    Returns two int arrays of length 4**level; entry p gives the position of
    the block whose address is the p-th element of {1,2,3,4}**level in
    lexicographic order, within the 2**level x 2**level block grid.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    rows = np.zeros(1, dtype=np.int64)
    cols = np.zeros(1, dtype=np.int64)
    row_off = np.array(_DIGIT_ROW, dtype=np.int64)
    col_off = np.array(_DIGIT_COL, dtype=np.int64)
    for _ in range(level):
        rows = (2 * rows[:, None] + row_off).ravel()
        cols = (2 * cols[:, None] + col_off).ravel()
    return rows, cols


def blocks_at_level(img: PixelImage, level: int) -> np.ndarray:
    """All level-`level` blocks as a (4**level, block_pixels) float matrix,
    rows in address-lexicographic order."""
    if not 0 <= level <= img.depth:
        raise ValueError(f"level {level} out of range 0..{img.depth}")
    g = 2 ** level
    b = img.side // g
    grid = img.data.reshape(g, b, g, b).transpose(0, 2, 1, 3)
    rows, cols = address_grid_coords(level)
    return grid[rows, cols].reshape(4 ** level, b * b).astype(np.float64)
