"""Compressed weight-tile formats: quantization codecs, the bitmask sparse
layout, and the DCAW file container.

A weight tile is a 16x32 block of BF16 values (512 elements, 1 KB dense).
The compressed form of one tile has three structures:

  bitmask   512 bits, one per element in row-major order; bit i is set iff
            element i survived pruning and is nonzero
  codes     quantized codes for the nonzeros, stored consecutively in
            row-major order
  scales    one scale byte per 32-element group, present only for group
            quantized formats

Supported element encodings:

  BF16   16-bit passthrough (codes are the BF16 bit patterns themselves)
  BF8    8-bit float, 1 sign / 5 exponent / 2 mantissa (E5M2, bias 15)
  FP4G   4-bit float, 1 sign / 2 exponent / 1 mantissa (E2M1), values
         +/-{0, 0.5, 1, 1.5, 2, 3, 4, 6}, with a mandatory power-of-two
         scale per 32-element group stored as a biased exponent byte
         (E8M0, bias 127)

Dequantization of BF8/FP4G codes is a table lookup; ``DequantLut`` holds
the 256-entry table the hardware-facing simulator shares with this
reference codec. Group scaling is applied multiplicatively after the
lookup, mirroring the separate scaling stage of the decompression
pipeline.

Quantization rounds to nearest with ties toward smaller magnitude.
Out-of-range magnitudes saturate to the largest finite code and are
counted (``CompressedTile.saturations``), never raised. NaN inputs are
treated like out-of-range values and saturate as well.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TILE_ROWS = 16
TILE_COLS = 32
TILE_ELEMS = TILE_ROWS * TILE_COLS  # 512
BITMASK_BYTES = TILE_ELEMS // 8  # 64

DCAW_MAGIC = b"DCAW"
DCAW_VERSION = 1

E8M0_BIAS = 127


class TileCorruptionError(ValueError):
    """A compressed tile violates its structural invariants."""


class ContainerFormatError(ValueError):
    """A DCAW byte stream has a bad header or is truncated."""


class UnsupportedFormatError(ValueError):
    """The requested operation does not apply to this quantization format."""


# ---------------------------------------------------------------------------
# BF16 helpers. BF16 values are carried as float32 arrays whose low 16
# mantissa bits are zero; the uint16 bit pattern is the upper half.
# ---------------------------------------------------------------------------


def bf16_round(x) -> np.ndarray:
    """Round float32/float64 values to the nearest BF16 (ties to even)."""
    x = np.asarray(x, dtype=np.float32)
    u = x.view(np.uint32) if x.flags["C_CONTIGUOUS"] else np.ascontiguousarray(x).view(np.uint32)
    nan = np.isnan(x)
    bias = np.uint32(0x7FFF) + ((u >> np.uint32(16)) & np.uint32(1))
    r = ((u + bias) >> np.uint32(16)) << np.uint32(16)
    out = r.view(np.float32).copy()
    if nan.any():
        # keep sign, quiet the payload; rounding NaN bits can carry into the sign
        q = ((u >> np.uint32(16)) & np.uint32(0x8000)) | np.uint32(0x7FC0)
        out[nan] = (q[nan].astype(np.uint32) << np.uint32(16)).view(np.float32)
    return out


def bf16_bits(x) -> np.ndarray:
    """Bit patterns (uint16) of BF16-exact float32 values."""
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float32))
    return (x.view(np.uint32) >> np.uint32(16)).astype(np.uint16)


def bf16_from_bits(bits) -> np.ndarray:
    """float32 values of BF16 bit patterns (uint16)."""
    b = np.asarray(bits, dtype=np.uint16)
    return (b.astype(np.uint32) << np.uint32(16)).view(np.float32)


def is_bf16_exact(x) -> bool:
    x = np.asarray(x, dtype=np.float32)
    pat = np.ascontiguousarray(x).view(np.uint32)
    return bool(((pat & np.uint32(0xFFFF)) == 0).all())


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------


class QuantFormat(Enum):
    BF16 = 16
    BF8 = 8
    FP4G = 4

    @property
    def bits_per_code(self) -> int:
        return self.value


@dataclass(frozen=True)
class CompressionScheme:
    """Element format plus target density and group-scaling layout.

    ``density`` is the fraction of elements kept as nonzeros, in (0, 1].
    FP4G requires 32-element groups with one E8M0 scale byte each; the
    other formats carry no scales.
    """

    format: QuantFormat
    density: float
    group_size: int = 0
    scale_bits: int = 0

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must be in (0, 1], got {self.density}")
        if self.format is QuantFormat.FP4G:
            if self.group_size != 32 or self.scale_bits != 8:
                raise ValueError("FP4G requires group_size=32 and scale_bits=8")
        else:
            if self.group_size != 0 or self.scale_bits != 0:
                raise ValueError(f"{self.format.name} does not use group scaling")
        if self.group_size and TILE_ELEMS % self.group_size:
            raise ValueError("group_size must divide 512")

    @classmethod
    def bf16(cls, density: float = 1.0) -> "CompressionScheme":
        return cls(QuantFormat.BF16, density)

    @classmethod
    def bf8(cls, density: float = 1.0) -> "CompressionScheme":
        return cls(QuantFormat.BF8, density)

    @classmethod
    def fp4g(cls, density: float = 1.0) -> "CompressionScheme":
        return cls(QuantFormat.FP4G, density, group_size=32, scale_bits=8)

    @property
    def bits_per_code(self) -> int:
        return self.format.bits_per_code

    @property
    def groups_per_tile(self) -> int:
        return TILE_ELEMS // self.group_size if self.group_size else 0

    @property
    def label(self) -> str:
        d = int(round(self.density * 100))
        return f"{self.format.name.lower()}_d{d:03d}"

    def to_descriptor(self) -> dict:
        return {
            "format": self.format.name,
            "density": self.density,
            "group_size": self.group_size,
            "scale_bits": self.scale_bits,
        }

    @classmethod
    def from_descriptor(cls, desc: dict) -> "CompressionScheme":
        try:
            fmt = QuantFormat[desc["format"]]
        except KeyError as e:
            raise ValueError(f"unknown quantization format {desc.get('format')!r}") from e
        return cls(
            format=fmt,
            density=float(desc["density"]),
            group_size=int(desc.get("group_size", 0)),
            scale_bits=int(desc.get("scale_bits", 0)),
        )


def compression_factor(scheme: CompressionScheme) -> float:
    """Model-size reduction vs dense BF16: 16 / (bits * density + 1).

    The +1 accounts for the bitmask bit carried per element; scale-factor
    bytes are deliberately excluded here (see ``bytes_per_tile`` for the
    full fetch-traffic accounting).
    """
    return 16.0 / (scheme.bits_per_code * scheme.density + 1.0)


def bytes_per_tile(scheme: CompressionScheme) -> int:
    """Fetched bytes per compressed tile: packed codes + bitmask + scales."""
    code_bytes = math.ceil(TILE_ELEMS * scheme.density * scheme.bits_per_code / 8 - 1e-9)
    scale_bytes = scheme.groups_per_tile * (scheme.scale_bits // 8) if scheme.group_size else 0
    return code_bytes + BITMASK_BYTES + scale_bytes


# ---------------------------------------------------------------------------
# Scalar decode of the element formats
# ---------------------------------------------------------------------------


def _e5m2_value(code: int) -> float:
    sign = -1.0 if code & 0x80 else 1.0
    e = (code >> 2) & 0x1F
    m = code & 0x3
    if e == 0:
        return sign * m * 2.0**-16  # subnormal: (m/4) * 2^-14
    if e == 31:
        return sign * math.inf if m == 0 else math.nan
    return sign * (1.0 + m / 4.0) * 2.0 ** (e - 15)


def _e2m1_value(code: int) -> float:
    sign = -1.0 if code & 0x8 else 1.0
    e = (code >> 1) & 0x3
    m = code & 0x1
    if e == 0:
        return sign * m * 0.5
    return sign * (1.0 + m / 2.0) * 2.0 ** (e - 1)


@dataclass(frozen=True)
class DequantLut:
    """256-entry code-to-BF16 table, stored as BF16 bit patterns.

    For codes narrower than 8 bits the table tiles so every 64-entry
    sub-table is self-contained: entries[i] == entries[i % 2**bits].
    """

    entries: np.ndarray  # uint16[256]
    bits_per_code: int

    @property
    def effective_size(self) -> int:
        return 1 << self.bits_per_code

    @property
    def values(self) -> np.ndarray:
        return bf16_from_bits(self.entries)


def _scalar_decode_bits(code: int, fmt: QuantFormat) -> int:
    """BF16 bit pattern for one code (NaN canonicalized, sign kept)."""
    v = _e5m2_value(code) if fmt is QuantFormat.BF8 else _e2m1_value(code)
    if math.isnan(v):
        return ((code >> 7) & 1) << 15 | 0x7FC0
    return int(bf16_bits(np.float32(v))[()])


_LUT_CACHE: dict[QuantFormat, DequantLut] = {}


def build_lut(scheme: CompressionScheme) -> DequantLut:
    """Dequantization table for the scheme's format; rejects BF16."""
    fmt = scheme.format
    if fmt is QuantFormat.BF16:
        raise UnsupportedFormatError("BF16 codes are 16-bit and cannot be LUT-addressed")
    if fmt not in _LUT_CACHE:
        bits = fmt.bits_per_code
        base = np.array([_scalar_decode_bits(c, fmt) for c in range(1 << bits)], dtype=np.uint16)
        entries = np.tile(base, 256 // (1 << bits))
        entries.setflags(write=False)
        _LUT_CACHE[fmt] = DequantLut(entries=entries, bits_per_code=bits)
    return _LUT_CACHE[fmt]


def dequantize_value(code: int, scheme: CompressionScheme) -> float:
    """Scalar dequantization; bit-identical to a DequantLut lookup."""
    bits = scheme.bits_per_code
    if not 0 <= code < (1 << bits):
        raise ValueError(f"code {code} out of range for {bits}-bit format")
    if scheme.format is QuantFormat.BF16:
        return float(bf16_from_bits(np.uint16(code))[()])
    return float(build_lut(scheme).values[code])


# ---------------------------------------------------------------------------
# Nearest-code quantization
# ---------------------------------------------------------------------------

# sorted finite candidate values and their codes, per format (excludes -0,
# inf and NaN so saturation falls out of the clamped search)
_CAND_CACHE: dict[QuantFormat, tuple[np.ndarray, np.ndarray]] = {}


def _candidates(fmt: QuantFormat) -> tuple[np.ndarray, np.ndarray]:
    if fmt not in _CAND_CACHE:
        bits = fmt.bits_per_code
        decode = _e5m2_value if fmt is QuantFormat.BF8 else _e2m1_value
        pairs = []
        for c in range(1 << bits):
            v = decode(c)
            if math.isfinite(v) and not (v == 0.0 and c != 0):  # keep only +0
                pairs.append((v, c))
        pairs.sort()
        vals = np.array([p[0] for p in pairs], dtype=np.float64)
        codes = np.array([p[1] for p in pairs], dtype=np.uint16)
        vals.setflags(write=False)
        codes.setflags(write=False)
        _CAND_CACHE[fmt] = (vals, codes)
    return _CAND_CACHE[fmt]


def _quantize_array(x: np.ndarray, fmt: QuantFormat) -> tuple[np.ndarray, int]:
    """Nearest-code quantization of a float array.

    Ties round toward smaller magnitude. Values beyond the largest finite
    magnitude (NaN included) clamp to the extreme codes; the clamp count is
    returned so callers can surface a saturation counter.
    """
    if fmt is QuantFormat.BF16:
        return bf16_bits(x), 0
    vals, codes = _candidates(fmt)
    x = np.asarray(x, dtype=np.float64)
    finite = np.isfinite(x)
    sat = int(np.count_nonzero(~finite | (np.abs(np.where(finite, x, 0.0)) > vals[-1])))
    xs = np.where(finite, x, np.where(np.signbit(x), vals[0], vals[-1]))
    idx = np.searchsorted(vals, xs)
    lo = np.clip(idx - 1, 0, len(vals) - 1)
    hi = np.clip(idx, 0, len(vals) - 1)
    d_lo = xs - vals[lo]
    d_hi = vals[hi] - xs
    pick_hi = (d_hi < d_lo) | ((d_hi == d_lo) & (np.abs(vals[hi]) < np.abs(vals[lo])))
    chosen = np.where(pick_hi, hi, lo)
    return codes[chosen], sat


def quantize_value(x: float, scheme: CompressionScheme, group_scale: float = 1.0) -> int:
    """Scalar nearest-code quantization of one value.

    ``group_scale`` must be positive and is only meaningful for group
    quantized formats; the value quantized is x / group_scale.
    """
    if scheme.group_size:
        if not group_scale > 0:
            raise ValueError("group_scale must be > 0 for group-quantized schemes")
        x = x / group_scale
    elif group_scale != 1.0:
        raise ValueError("group_scale is only valid for group-quantized schemes")
    code, _ = _quantize_array(np.asarray([x]), scheme.format)
    return int(code[0])


def _group_scale_exponents(pruned: np.ndarray, group_size: int) -> np.ndarray:
    """Per-group power-of-two exponents k with 6 * 2**k >= max|group|, minimal.

    A group of zeros gets k = 0. Exponents clamp to the E8M0 range.
    """
    groups = pruned.reshape(-1, group_size)
    amax = np.max(np.abs(groups), axis=1)
    exps = np.zeros(len(amax), dtype=np.int32)
    for i, a in enumerate(amax):
        if a == 0.0 or not math.isfinite(a):
            continue
        m, e = math.frexp(float(a))  # a = m * 2^e, m in [0.5, 1)
        exps[i] = e - 3 if m <= 0.75 else e - 2
    return np.clip(exps, -E8M0_BIAS, E8M0_BIAS)


def scale_factor(scale_byte: int) -> float:
    """Decode an E8M0 scale byte to its power-of-two factor."""
    return math.ldexp(1.0, int(scale_byte) - E8M0_BIAS)


# ---------------------------------------------------------------------------
# Tiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseTile:
    """16x32 block of BF16 values held as a float32 array."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.shape != (TILE_ROWS, TILE_COLS) or v.dtype != np.float32:
            raise ValueError("DenseTile wants a float32 array of shape (16, 32)")
        if not is_bf16_exact(v):
            raise ValueError("tile values must be exact BF16; use DenseTile.from_array")

    @classmethod
    def from_array(cls, arr) -> "DenseTile":
        """Build a tile, rounding arbitrary floats to BF16."""
        a = np.asarray(arr, dtype=np.float32).reshape(TILE_ROWS, TILE_COLS)
        return cls(bf16_round(a))

    @property
    def has_nan(self) -> bool:
        return bool(np.isnan(self.values).any())

    @property
    def bits(self) -> np.ndarray:
        return bf16_bits(self.values)


@dataclass(eq=False)
class CompressedTile:
    """Bitmask + packed codes (+ group scales) for one tile."""

    bitmask: np.ndarray  # bool[512]
    codes: np.ndarray  # uint16[popcount]
    scales: np.ndarray  # uint8[groups] (empty when no group scaling)
    saturations: int = field(default=0, compare=False)

    def __post_init__(self):
        self.bitmask = np.asarray(self.bitmask, dtype=bool).reshape(TILE_ELEMS)
        self.codes = np.asarray(self.codes, dtype=np.uint16)
        self.scales = np.asarray(self.scales, dtype=np.uint8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedTile):
            return NotImplemented
        return (
            np.array_equal(self.bitmask, other.bitmask)
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.scales, other.scales)
        )

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.bitmask))

    def packed_bitmask(self) -> bytes:
        # bit i lives in byte i//8, bit position i%8
        return np.packbits(self.bitmask, bitorder="little").tobytes()

    def validate(self, scheme: CompressionScheme) -> None:
        if self.popcount != len(self.codes):
            raise TileCorruptionError(
                f"bitmask popcount {self.popcount} != {len(self.codes)} codes"
            )
        want_scales = scheme.groups_per_tile
        if len(self.scales) != want_scales:
            raise TileCorruptionError(f"expected {want_scales} scales, got {len(self.scales)}")
        if len(self.codes) and int(self.codes.max()) >= (1 << scheme.bits_per_code):
            raise TileCorruptionError("code wider than the scheme's bits_per_code")


def compress_tile(tile: DenseTile, scheme: CompressionScheme) -> CompressedTile:
    """Prune to the target density, then quantize the survivors.

    Pruning keeps the ceil(512 * density) largest-magnitude elements,
    breaking magnitude ties toward the lower row-major index. Bits are set
    only for kept elements that are nonzero.
    """
    flat = tile.values.reshape(TILE_ELEMS).astype(np.float64)
    keep_n = math.ceil(TILE_ELEMS * scheme.density - 1e-9)
    mag = np.abs(flat)
    mag[np.isnan(mag)] = np.inf
    order = np.argsort(-mag, kind="stable")  # stable: ties keep lower index first
    kept = np.zeros(TILE_ELEMS, dtype=bool)
    kept[order[:keep_n]] = True
    bitmask = kept & (flat != 0.0)

    pruned = np.where(bitmask, flat, 0.0)
    saturations = 0
    if scheme.group_size:
        exps = _group_scale_exponents(pruned, scheme.group_size)
        scales = (exps + E8M0_BIAS).astype(np.uint8)
        factors = np.ldexp(1.0, exps).repeat(scheme.group_size)
        scaled = pruned / factors
        codes_full, saturations = _quantize_array(scaled, scheme.format)
    else:
        scales = np.zeros(0, dtype=np.uint8)
        codes_full, saturations = _quantize_array(pruned, scheme.format)
    return CompressedTile(
        bitmask=bitmask, codes=codes_full[bitmask], scales=scales, saturations=saturations
    )


def decompress_tile_bits(ct: CompressedTile, scheme: CompressionScheme) -> np.ndarray:
    """Decompress to the 512 BF16 bit patterns of the dense tile."""
    ct.validate(scheme)
    out = np.zeros(TILE_ELEMS, dtype=np.uint16)
    pos = np.flatnonzero(ct.bitmask)
    if scheme.format is QuantFormat.BF16:
        out[pos] = ct.codes
    else:
        lut = build_lut(scheme)
        out[pos] = lut.entries[ct.codes]
    if scheme.group_size:
        factors = np.ldexp(
            1.0, ct.scales.astype(np.int32) - E8M0_BIAS
        ).repeat(scheme.group_size)
        scaled = bf16_from_bits(out).astype(np.float64) * factors
        out = bf16_bits(bf16_round(scaled))
    return out


def decompress_tile(ct: CompressedTile, scheme: CompressionScheme) -> DenseTile:
    bits = decompress_tile_bits(ct, scheme)
    return DenseTile(bf16_from_bits(bits).reshape(TILE_ROWS, TILE_COLS).copy())


# ---------------------------------------------------------------------------
# Matrix container ("DCAW")
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sHIIH")  # magic, version, rows, cols, descriptor length


def _pack_codes(codes: np.ndarray, bits: int) -> bytes:
    if bits == 16:
        return codes.astype("<u2").tobytes()
    if bits == 8:
        return codes.astype(np.uint8).tobytes()
    # 4-bit: two codes per byte, low nibble first
    c = codes.astype(np.uint8)
    if len(c) % 2:
        c = np.append(c, np.uint8(0))
    return (c[0::2] | (c[1::2] << np.uint8(4))).tobytes()


def _unpack_codes(raw: bytes, nnz: int, bits: int) -> np.ndarray:
    if bits == 16:
        return np.frombuffer(raw, dtype="<u2").astype(np.uint16)
    if bits == 8:
        return np.frombuffer(raw, dtype=np.uint8).astype(np.uint16)
    b = np.frombuffer(raw, dtype=np.uint8)
    lo = b & np.uint8(0x0F)
    hi = b >> np.uint8(4)
    return np.stack([lo, hi], axis=1).reshape(-1)[:nnz].astype(np.uint16)


def _code_bytes(nnz: int, bits: int) -> int:
    return (nnz * bits + 7) // 8


def iter_tiles(matrix: np.ndarray):
    """Yield 16x32 blocks in row-major tile order (r0c0, r0c1, ...)."""
    rows, cols = matrix.shape
    if rows % TILE_ROWS or cols % TILE_COLS:
        raise ValueError(f"matrix {rows}x{cols} is not divisible into 16x32 tiles")
    for r in range(0, rows, TILE_ROWS):
        for c in range(0, cols, TILE_COLS):
            yield matrix[r : r + TILE_ROWS, c : c + TILE_COLS]


def compress_matrix(matrix: np.ndarray, scheme: CompressionScheme) -> list[CompressedTile]:
    return [compress_tile(DenseTile.from_array(block), scheme) for block in iter_tiles(matrix)]


def encode_matrix(matrix: np.ndarray, scheme: CompressionScheme) -> bytes:
    """Serialize a matrix as a DCAW container (header + tiles)."""
    matrix = np.asarray(matrix, dtype=np.float32)
    rows, cols = matrix.shape
    desc = json.dumps(scheme.to_descriptor(), sort_keys=True, separators=(",", ":")).encode()
    parts = [_HEADER.pack(DCAW_MAGIC, DCAW_VERSION, rows, cols, len(desc)), desc]
    for ct in compress_matrix(matrix, scheme):
        parts.append(ct.packed_bitmask())
        parts.append(_pack_codes(ct.codes, scheme.bits_per_code))
        parts.append(ct.scales.tobytes())
    return b"".join(parts)


@dataclass
class DecodedMatrix:
    scheme: CompressionScheme
    rows: int
    cols: int
    tiles: list[CompressedTile]

    def decompress(self) -> np.ndarray:
        out = np.empty((self.rows, self.cols), dtype=np.float32)
        it = iter(self.tiles)
        for r in range(0, self.rows, TILE_ROWS):
            for c in range(0, self.cols, TILE_COLS):
                out[r : r + TILE_ROWS, c : c + TILE_COLS] = decompress_tile(
                    next(it), self.scheme
                ).values
        return out


def decode_matrix(data: bytes) -> DecodedMatrix:
    """Parse a DCAW container back into compressed tiles."""
    if len(data) < _HEADER.size:
        raise ContainerFormatError("truncated header")
    magic, version, rows, cols, desc_len = _HEADER.unpack_from(data, 0)
    if magic != DCAW_MAGIC:
        raise ContainerFormatError(f"bad magic {magic!r}")
    if version != DCAW_VERSION:
        raise ContainerFormatError(f"unsupported version {version}")
    off = _HEADER.size
    if len(data) < off + desc_len:
        raise ContainerFormatError("truncated scheme descriptor")
    scheme = CompressionScheme.from_descriptor(json.loads(data[off : off + desc_len]))
    off += desc_len
    if rows % TILE_ROWS or cols % TILE_COLS:
        raise ContainerFormatError(f"dimensions {rows}x{cols} are not tile-divisible")
    n_tiles = (rows // TILE_ROWS) * (cols // TILE_COLS)
    scale_bytes = scheme.groups_per_tile
    tiles = []
    for _ in range(n_tiles):
        if len(data) < off + BITMASK_BYTES:
            raise ContainerFormatError("truncated bitmask")
        mask = np.unpackbits(
            np.frombuffer(data, dtype=np.uint8, count=BITMASK_BYTES, offset=off),
            bitorder="little",
        ).astype(bool)
        off += BITMASK_BYTES
        nnz = int(mask.sum())
        nbytes = _code_bytes(nnz, scheme.bits_per_code)
        if len(data) < off + nbytes + scale_bytes:
            raise ContainerFormatError("truncated tile payload")
        codes = _unpack_codes(data[off : off + nbytes], nnz, scheme.bits_per_code)
        off += nbytes
        scales = np.frombuffer(data, dtype=np.uint8, count=scale_bytes, offset=off).copy()
        off += scale_bytes
        tiles.append(CompressedTile(bitmask=mask, codes=codes, scales=scales))
    if off != len(data):
        raise ContainerFormatError(f"{len(data) - off} trailing bytes after last tile")
    return DecodedMatrix(scheme=scheme, rows=rows, cols=cols, tiles=tiles)


# ---------------------------------------------------------------------------
# Raw matrix files ({u32 rows, u32 cols, little-endian BF16 payload})
# ---------------------------------------------------------------------------


def write_raw_matrix(path, matrix: np.ndarray) -> None:
    m = bf16_round(np.asarray(matrix, dtype=np.float32))
    rows, cols = m.shape
    with open(path, "wb") as f:
        f.write(struct.pack("<II", rows, cols))
        f.write(bf16_bits(m).astype("<u2").tobytes())


def read_raw_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(8)
        if len(head) != 8:
            raise ContainerFormatError("truncated raw-matrix header")
        rows, cols = struct.unpack("<II", head)
        payload = f.read()
    if len(payload) != rows * cols * 2:
        raise ContainerFormatError(
            f"raw matrix payload has {len(payload)} bytes, expected {rows * cols * 2}"
        )
    bits = np.frombuffer(payload, dtype="<u2").astype(np.uint16)
    return bf16_from_bits(bits).reshape(rows, cols).copy()


def pad_to_tiles(matrix: np.ndarray) -> np.ndarray:
    """Zero-pad a matrix up to the next multiple of the tile dimensions."""
    rows, cols = matrix.shape
    pr = (-rows) % TILE_ROWS
    pc = (-cols) % TILE_COLS
    if pr == 0 and pc == 0:
        return matrix
    return np.pad(matrix, ((0, pr), (0, pc)))


__all__ = [
    "TILE_ROWS",
    "TILE_COLS",
    "TILE_ELEMS",
    "BITMASK_BYTES",
    "QuantFormat",
    "CompressionScheme",
    "DenseTile",
    "CompressedTile",
    "DequantLut",
    "DecodedMatrix",
    "TileCorruptionError",
    "ContainerFormatError",
    "UnsupportedFormatError",
    "bf16_round",
    "bf16_bits",
    "bf16_from_bits",
    "is_bf16_exact",
    "compression_factor",
    "bytes_per_tile",
    "quantize_value",
    "dequantize_value",
    "build_lut",
    "scale_factor",
    "compress_tile",
    "decompress_tile",
    "decompress_tile_bits",
    "compress_matrix",
    "encode_matrix",
    "decode_matrix",
    "iter_tiles",
    "read_raw_matrix",
    "write_raw_matrix",
    "pad_to_tiles",
]
