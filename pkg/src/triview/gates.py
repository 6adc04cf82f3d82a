"""Three-stage quality cascade for candidate crops: BH (blur/haze), C (contrast), UN (uniformity/noise).

Each stage compares fixed grayscale statistics against configurable floors and
ceilings. The cascade applies the stages in order and stops at the first
rejection; the report records which stage fired and every statistic measured
up to that point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from . import raster
from .errors import ImageTooSmall
from .raster import GrayImage

UN_BLOCK = 8  # tile side for the noise-signature statistic

STAGE_BH = "BH"
STAGE_C = "C"
STAGE_UN = "UN"


@dataclass(frozen=True)
class GateThresholds:
    """Floors and ceilings for the three gates.

    Defaults are calibrated so that flat, foggy, low-contrast and noise-like
    crops fail while textured scenes pass; all six values are configurable.
    """

    bh_lap_min: float = 50.0
    bh_std_min: float = 10.0
    c_range_min: float = 60.0
    un_entropy_min: float = 4.0
    un_sat_max: float = 0.05
    un_noise_ratio_min: float = 0.05

    def __post_init__(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) < 0.0:
                raise ValueError(f"{f.name} must be non-negative")
        if self.un_entropy_min > 8.0:
            raise ValueError("un_entropy_min cannot exceed 8 bits")
        if not 0.0 <= self.un_sat_max <= 1.0:
            raise ValueError("un_sat_max must lie in [0, 1]")
        if not 0.0 <= self.un_noise_ratio_min <= 1.0:
            raise ValueError("un_noise_ratio_min must lie in [0, 1]")

    @classmethod
    def from_file(cls, path: str | Path) -> "GateThresholds":
        """Load thresholds from a flat key=value file (keys are the field names)."""
        known = {f.name for f in fields(cls)}
        values: dict[str, float] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown threshold {key!r}")
            values[key] = float(raw.strip())
        return cls(**values)

    def to_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class GateReport:
    """Outcome of the cascade for one image."""

    verdict: str  # "pass" | "rejected"
    rejected_by: str  # "BH" | "C" | "UN" | "none"
    stats: dict[str, float]

    def to_json(self) -> str:
        return json.dumps(
            {"verdict": self.verdict, "rejected_by": self.rejected_by, "stats": self.stats},
            separators=(",", ":"),
        )


def _bh_stats(g: GrayImage) -> dict[str, float]:
    return {
        "laplacian_variance": raster.laplacian_variance(g),
        "pixel_variance": raster.pixel_variance(g),
    }


def _c_stats(g: GrayImage) -> dict[str, float]:
    return {"contrast_range": float(raster.contrast_range(g, 1.0, 99.0))}


def _un_stats(g: GrayImage) -> dict[str, float]:
    black, white = raster.saturated_ratio(g)
    return {
        "entropy": raster.histogram_entropy(g),
        "saturated_black": black,
        "saturated_white": white,
        "noise_ratio": raster.block_mean_variance_ratio(g, UN_BLOCK),
    }


def _bh_passes(stats: dict[str, float], t: GateThresholds) -> bool:
    return (
        stats["laplacian_variance"] >= t.bh_lap_min
        and stats["pixel_variance"] ** 0.5 >= t.bh_std_min
    )


def _c_passes(stats: dict[str, float], t: GateThresholds) -> bool:
    return stats["contrast_range"] >= t.c_range_min


def _un_passes(stats: dict[str, float], t: GateThresholds) -> bool:
    return (
        stats["entropy"] >= t.un_entropy_min
        and max(stats["saturated_black"], stats["saturated_white"]) <= t.un_sat_max
        and stats["noise_ratio"] >= t.un_noise_ratio_min
    )


def bh_gate(g: GrayImage, t: GateThresholds) -> bool:
    """Texture gate: pass unless Laplacian variance or pixel std is below floor."""
    return _bh_passes(_bh_stats(g), t)


def c_gate(g: GrayImage, t: GateThresholds) -> bool:
    """Contrast gate: pass unless the (1, 99) percentile range is below floor."""
    return _c_passes(_c_stats(g), t)


def un_gate(g: GrayImage, t: GateThresholds) -> bool:
    """Uniformity/noise gate on entropy, saturation ratios and block-mean ratio."""
    if g.width < UN_BLOCK or g.height < UN_BLOCK:
        raise ImageTooSmall(f"UN gate needs at least {UN_BLOCK}x{UN_BLOCK} pixels")
    return _un_passes(_un_stats(g), t)


def gate_cascade(g: GrayImage, t: GateThresholds) -> GateReport:
    """Run BH, then C, then UN, stopping at the first stage that rejects."""
    if g.width < UN_BLOCK or g.height < UN_BLOCK:
        raise ImageTooSmall(f"cascade needs at least {UN_BLOCK}x{UN_BLOCK} pixels")
    stats = _bh_stats(g)
    if not _bh_passes(stats, t):
        return GateReport(verdict="rejected", rejected_by=STAGE_BH, stats=stats)
    stats.update(_c_stats(g))
    if not _c_passes(stats, t):
        return GateReport(verdict="rejected", rejected_by=STAGE_C, stats=stats)
    stats.update(_un_stats(g))
    if not _un_passes(stats, t):
        return GateReport(verdict="rejected", rejected_by=STAGE_UN, stats=stats)
    return GateReport(verdict="pass", rejected_by="none", stats=stats)
