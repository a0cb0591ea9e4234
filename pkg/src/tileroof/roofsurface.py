"""Three-rate analytical performance model for compressed-tile GeMM.

A kernel streams compressed weight tiles through three interacting
resources: memory delivers tiles at MBW * AI_XM tiles/s, vector hardware
decompresses them at VOS * AI_XV tiles/s, and the matrix unit multiplies
them at MOS tiles/s. Achievable throughput is the minimum:

    TPS   = min(MBW * AI_XM, VOS * AI_XV, MOS)
    FLOPS = 512 * N * TPS          (one tile op = 512*N FMAs, N <= 16)

AI_XM = 1 / bytes-per-compressed-tile and AI_XV = 1 / vector-ops-per-tile
form the kernel's signature; plotted as (x, y) the signature plane splits
into MEM / VEC / MTX bound regions (the BORD projection) separated by
y = (MBW/VOS) x, x = MOS/MBW, and y = MOS/VOS.

For the near-core decompression engine, AI_XV follows from its sizing
(w output elements per vector op, l lookup tables): a tile needs 512/w
vector ops, and a vector op whose window holds more nonzero codes than
the per-cycle dequantization capacity l_q stalls the pipeline for extra
cycles ("bubbles"). With uniformly random sparsity the nonzero count of a
w-wide window is Binomial(w, density), giving the expected bubbles per
vector op computed by ``expected_bpv`` and checked empirically by
``mc_bpv``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .formats import CompressionScheme, QuantFormat
from .formats import bytes_per_tile as _scheme_bytes

TILE_FMAS_PER_ROW = 512  # one tile multiply is 512*N FMAs

N_MIN, N_MAX = 1, 16


class UnsupportedSchemeError(ValueError):
    """Scheme cannot be processed by the decompression engine."""


@dataclass(frozen=True)
class MachineConfig:
    """Rates of one machine: frequency, core count, SIMD width, memory BW.

    VOS = freq * cores * simd_units_per_core (vector ops per second) and
    MOS = freq * cores / tmul_cycles (tile multiplies per second).
    """

    label: str
    freq_hz: float
    cores: int
    simd_units_per_core: float
    mem_bw: float
    tmul_cycles: int = 16

    def __post_init__(self):
        for name in ("freq_hz", "cores", "simd_units_per_core", "mem_bw"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not (isinstance(self.tmul_cycles, int) and self.tmul_cycles >= 1):
            raise ValueError("tmul_cycles must be an integer >= 1")

    @property
    def vos(self) -> float:
        return self.freq_hz * self.cores * self.simd_units_per_core

    @property
    def mos(self) -> float:
        return self.freq_hz * self.cores / self.tmul_cycles

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "freq_hz": self.freq_hz,
            "cores": self.cores,
            "simd_units_per_core": self.simd_units_per_core,
            "tmul_cycles": self.tmul_cycles,
            "mem_bw": self.mem_bw,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MachineConfig":
        return cls(
            label=str(obj["label"]),
            freq_hz=float(obj["freq_hz"]),
            cores=int(obj["cores"]),
            simd_units_per_core=float(obj["simd_units_per_core"]),
            mem_bw=float(obj["mem_bw"]),
            tmul_cycles=int(obj.get("tmul_cycles", 16)),
        )

    @classmethod
    def from_file(cls, path) -> "MachineConfig":
        with open(path) as f:
            return cls.from_json(json.load(f))


_W_CHOICES = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class EngineParams:
    """Decompression-engine sizing: output width per vector op and LUT count."""

    w: int
    l: int

    def __post_init__(self):
        if self.w not in _W_CHOICES:
            raise ValueError(f"w must be a power of two in [8, 128], got {self.w}")
        if not 1 <= self.l <= self.w:
            raise ValueError(f"l must be in [1, w], got {self.l}")

    @property
    def lut_entries(self) -> int:
        return 256 * self.l

    @property
    def vops_per_tile(self) -> int:
        return 512 // self.w


@dataclass(frozen=True)
class KernelSignature:
    """(AI_XM, AI_XV) pair that fully determines a kernel's projected rate."""

    ai_xm: float
    ai_xv: float
    n: int = 1
    label: str = ""

    def __post_init__(self):
        if not (self.ai_xm > 0 and self.ai_xv > 0):
            raise ValueError("arithmetic intensities must be positive")
        if not N_MIN <= self.n <= N_MAX:
            raise ValueError(f"n must be in [{N_MIN}, {N_MAX}]")


class Region(str, Enum):
    MEM = "MEM"
    VEC = "VEC"
    MTX = "MTX"


_REGION_ORDER = (Region.MEM, Region.VEC, Region.MTX)


@dataclass(frozen=True)
class RegionLabel:
    primary: Region
    binding_set: frozenset

    def __post_init__(self):
        if not self.binding_set or self.primary not in self.binding_set:
            raise ValueError("primary must belong to the non-empty binding set")


# ---------------------------------------------------------------------------
# Arithmetic intensities
# ---------------------------------------------------------------------------


def ai_xm(scheme: CompressionScheme) -> float:
    """Tile ops per byte fetched: 1 / bytes per compressed tile."""
    return 1.0 / _scheme_bytes(scheme)


def lq_for_bits(l: int, bits_per_code: int) -> int:
    """Elements dequantized per cycle: l for 8-bit codes, 2l for 7-bit,
    4l for 6-bit and narrower."""
    if bits_per_code > 8:
        raise UnsupportedSchemeError(
            f"{bits_per_code}-bit codes cannot be LUT-dequantized by the engine"
        )
    if bits_per_code == 8:
        return l
    if bits_per_code == 7:
        return 2 * l
    return 4 * l


def lq(engine: EngineParams, scheme: CompressionScheme) -> int:
    return lq_for_bits(engine.l, scheme.bits_per_code)


def _window_bubbles(nnz, lq_val: int):
    """Bubbles a window with nnz nonzero codes injects: ceil(nnz/lq) - 1,
    floored at 0 (an empty window still costs its one base cycle)."""
    return np.maximum(-(-np.asarray(nnz) // lq_val), 1) - 1


def expected_bpv(engine: EngineParams, scheme: CompressionScheme) -> float:
    """Expected pipeline bubbles per vector op.

    Dense schemes give exactly ceil(w / l_q) - 1. For density d < 1 the
    window nonzero count is Binomial(w, d) and the expectation is summed
    directly over the pmf, with the terms accumulated from log-space for
    stability at w up to 128.
    """
    w = engine.w
    lq_val = lq(engine, scheme)
    d = scheme.density
    if d == 1.0:
        return float(math.ceil(w / lq_val) - 1)
    log_d = math.log(d)
    log_q = math.log1p(-d)
    lg_w = math.lgamma(w + 1)
    total = 0.0
    for j in range(1, w + 1):
        b = math.ceil(j / lq_val) - 1
        if b == 0:
            continue
        lp = lg_w - math.lgamma(j + 1) - math.lgamma(w - j + 1) + j * log_d + (w - j) * log_q
        total += b * math.exp(lp)
    return total


def mc_bpv(
    engine: EngineParams, scheme: CompressionScheme, samples: int, seed: int = 0
) -> float:
    """Monte-Carlo estimate of bubbles per vector op.

    Each sample is one w-wide window of Bernoulli(density) bits; only the
    nonzero count matters, so the count is drawn from Binomial(w, density)
    directly. Deterministic for a fixed seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lq_val = lq(engine, scheme)
    rng = np.random.default_rng(seed)
    total = 0
    remaining = samples
    chunk = 1 << 20
    while remaining > 0:
        n = min(chunk, remaining)
        nnz = rng.binomial(engine.w, scheme.density, size=n)
        total += int(_window_bubbles(nnz, lq_val).sum())
        remaining -= n
    return total / samples


def engine_ai_xv(engine: EngineParams, scheme: CompressionScheme) -> float:
    """AI_XV of the engine for a scheme: 1 / (vops_per_tile * (1 + bpv))."""
    return 1.0 / (engine.vops_per_tile * (1.0 + expected_bpv(engine, scheme)))


def engine_signature(
    engine: EngineParams, scheme: CompressionScheme, n: int = 1, label: str = ""
) -> KernelSignature:
    return KernelSignature(
        ai_xm=ai_xm(scheme),
        ai_xv=engine_ai_xv(engine, scheme),
        n=n,
        label=label or scheme.label,
    )


def software_signature(
    scheme: CompressionScheme, vo_tile: float, n: int = 1, label: str = ""
) -> KernelSignature:
    """Signature of a software decompression kernel with a measured or
    configured vector-op count per tile."""
    if not vo_tile > 0:
        raise ValueError("vo_tile must be > 0")
    return KernelSignature(
        ai_xm=ai_xm(scheme), ai_xv=1.0 / vo_tile, n=n, label=label or scheme.label
    )


# ---------------------------------------------------------------------------
# The model
# ---------------------------------------------------------------------------


def rates(machine: MachineConfig, sig: KernelSignature) -> tuple[float, float, float]:
    """The three tile rates (mem, vec, mtx) in tiles per second."""
    return (machine.mem_bw * sig.ai_xm, machine.vos * sig.ai_xv, machine.mos)


def tps(machine: MachineConfig, sig: KernelSignature) -> float:
    """Tiles per second: the minimum of the three rates."""
    return min(rates(machine, sig))


def _check_n(n: int) -> int:
    if not (isinstance(n, int) and N_MIN <= n <= N_MAX):
        raise ValueError(f"batch rows n must be an integer in [{N_MIN}, {N_MAX}]")
    return n


def flops(machine: MachineConfig, sig: KernelSignature, n: int | None = None) -> float:
    """FMAs per second: 512 * n * tps."""
    n = _check_n(sig.n if n is None else n)
    return TILE_FMAS_PER_ROW * n * tps(machine, sig)


def roofline_flops(machine: MachineConfig, sig: KernelSignature, n: int | None = None) -> float:
    """Classic two-rate roofline (memory and matrix only, no vector term)."""
    n = _check_n(sig.n if n is None else n)
    mem, _, mtx = rates(machine, sig)
    return TILE_FMAS_PER_ROW * n * min(mem, mtx)


_TIE_RTOL = 1e-12


def classify(machine: MachineConfig, sig: KernelSignature) -> RegionLabel:
    """Which rate(s) bind the kernel; ties within 1e-12 relative are shared.

    ``primary`` is the first binding factor in the canonical order
    MEM, VEC, MTX.
    """
    r = rates(machine, sig)
    lo = min(r)
    binding = frozenset(
        reg for reg, v in zip(_REGION_ORDER, r) if v <= lo * (1.0 + _TIE_RTOL)
    )
    primary = next(reg for reg in _REGION_ORDER if reg in binding)
    return RegionLabel(primary=primary, binding_set=binding)


@dataclass(frozen=True)
class BordBoundaries:
    """The three region-separating lines in (AI_XM, AI_XV) space."""

    mem_vec_slope: float  # y = slope * x through the origin
    mem_mtx_ai_xm: float  # vertical line x = MOS / MBW
    vec_mtx_ai_xv: float  # horizontal line y = MOS / VOS

    def lines(self) -> list[tuple[str, str, float]]:
        return [
            ("mem_vec", "slope_through_origin", self.mem_vec_slope),
            ("mem_mtx", "ai_xm", self.mem_mtx_ai_xm),
            ("vec_mtx", "ai_xv", self.vec_mtx_ai_xv),
        ]


def bord_boundaries(machine: MachineConfig) -> BordBoundaries:
    return BordBoundaries(
        mem_vec_slope=machine.mem_bw / machine.vos,
        mem_mtx_ai_xm=machine.mos / machine.mem_bw,
        vec_mtx_ai_xv=machine.mos / machine.vos,
    )


@dataclass(frozen=True)
class MeshPoint:
    ai_xm: float
    ai_xv: float
    flops: float
    region: RegionLabel


def surface_mesh(
    machine: MachineConfig,
    ai_xm_grid: Sequence[float],
    ai_xv_grid: Sequence[float],
    n: int = 1,
) -> list[MeshPoint]:
    """Evaluate the model over a grid, row-major by (ai_xm, then ai_xv)."""
    for grid in (ai_xm_grid, ai_xv_grid):
        arr = np.asarray(grid, dtype=float)
        if arr.size and (not (arr > 0).all() or not (np.diff(arr) > 0).all()):
            raise ValueError("grids must be strictly increasing and positive")
    out = []
    for x in ai_xm_grid:
        for y in ai_xv_grid:
            sig = KernelSignature(ai_xm=float(x), ai_xv=float(y), n=n)
            out.append(
                MeshPoint(
                    ai_xm=float(x),
                    ai_xv=float(y),
                    flops=flops(machine, sig, n),
                    region=classify(machine, sig),
                )
            )
    return out


def scale_machine(
    machine: MachineConfig, vos_mult: float = 1.0, mbw_mult: float = 1.0
) -> MachineConfig:
    """What-if copy with scaled vector throughput and/or memory bandwidth."""
    if not (vos_mult > 0 and mbw_mult > 0):
        raise ValueError("multipliers must be > 0")
    label = machine.label
    if vos_mult != 1.0:
        label += f" xVOS{vos_mult:g}"
    if mbw_mult != 1.0:
        label += f" xMBW{mbw_mult:g}"
    return replace(
        machine,
        label=label,
        simd_units_per_core=machine.simd_units_per_core * vos_mult,
        mem_bw=machine.mem_bw * mbw_mult,
    )


def engine_machine(machine: MachineConfig) -> MachineConfig:
    """Machine view when decompression runs on the near-core engine.

    Each core drives one engine that completes at most one vector op per
    cycle, so the effective VOS is freq * cores * 1.
    """
    return replace(machine, label=machine.label + " +engine", simd_units_per_core=1.0)


def per_core_machine(machine: MachineConfig) -> MachineConfig:
    """Single-core slice of a machine (bandwidth split evenly across cores)."""
    return replace(
        machine,
        label=machine.label + " /core",
        cores=1,
        mem_bw=machine.mem_bw / machine.cores,
    )


def supported_by_engine(scheme: CompressionScheme) -> bool:
    return scheme.format is not QuantFormat.BF16


def bord_points(
    machine: MachineConfig, signatures: Iterable[KernelSignature]
) -> list[tuple[str, float, float, RegionLabel]]:
    """(label, ai_xm, ai_xv, region) rows for a BORD scatter."""
    return [
        (sig.label, sig.ai_xm, sig.ai_xv, classify(machine, sig)) for sig in signatures
    ]


__all__ = [
    "MachineConfig",
    "EngineParams",
    "KernelSignature",
    "Region",
    "RegionLabel",
    "BordBoundaries",
    "MeshPoint",
    "UnsupportedSchemeError",
    "ai_xm",
    "lq",
    "lq_for_bits",
    "expected_bpv",
    "mc_bpv",
    "engine_ai_xv",
    "engine_signature",
    "software_signature",
    "rates",
    "tps",
    "flops",
    "roofline_flops",
    "classify",
    "bord_boundaries",
    "surface_mesh",
    "scale_machine",
    "engine_machine",
    "per_core_machine",
    "supported_by_engine",
    "bord_points",
]
