"""Shipped machine and kernel-portfolio presets.

These are calibration inputs, not measurements: the machine files describe
plausible DDR- and HBM-class server parts, and the portfolio's software
vector-op counts (vo_tile) are reconstructed estimates for an AVX-512
decompression sequence (roughly ten vector ops per 64-byte output line,
plus format-dependent dequantization work). Results that depend on them
are reproductions under this calibration, not hardware claims.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .formats import CompressionScheme
from .roofsurface import MachineConfig, supported_by_engine

MACHINE_PRESETS = ("hbm", "ddr")


@dataclass(frozen=True)
class PortfolioKernel:
    label: str
    scheme: CompressionScheme
    vo_tile: float


def _data_text(name: str) -> str:
    return resources.files("tileroof").joinpath("data", name).read_text()


def preset_machine(name: str) -> MachineConfig:
    if name not in MACHINE_PRESETS:
        raise ValueError(f"unknown machine preset {name!r}; choose from {MACHINE_PRESETS}")
    return MachineConfig.from_json(json.loads(_data_text(f"machine_{name}.json")))


def load_machine(path_or_preset: str) -> MachineConfig:
    """Load a machine config from a JSON file path or a preset name."""
    if path_or_preset in MACHINE_PRESETS:
        return preset_machine(path_or_preset)
    return MachineConfig.from_file(path_or_preset)


def parse_portfolio(obj: list) -> list[PortfolioKernel]:
    kernels = []
    for entry in obj:
        kernels.append(
            PortfolioKernel(
                label=str(entry["label"]),
                scheme=CompressionScheme.from_descriptor(entry["scheme"]),
                vo_tile=float(entry["vo_tile"]),
            )
        )
    if not kernels:
        raise ValueError("empty portfolio")
    return kernels


def preset_portfolio() -> list[PortfolioKernel]:
    return parse_portfolio(json.loads(_data_text("portfolio.json")))


def load_portfolio(path_or_preset: str) -> list[PortfolioKernel]:
    if path_or_preset == "reconstruction":
        return preset_portfolio()
    with open(path_or_preset) as f:
        return parse_portfolio(json.load(f))


def engine_kernels(kernels: list[PortfolioKernel]) -> list[PortfolioKernel]:
    """Subset the engine can process (code width of 8 bits or less)."""
    return [k for k in kernels if supported_by_engine(k.scheme)]


__all__ = [
    "MACHINE_PRESETS",
    "PortfolioKernel",
    "preset_machine",
    "preset_portfolio",
    "load_machine",
    "load_portfolio",
    "parse_portfolio",
    "engine_kernels",
]
