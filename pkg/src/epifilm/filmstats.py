"""AFM roughness statistics, growth-rate arithmetic, and the empirical
phase-prediction rule.

The phase rule is a data-carried classifier seeded from the observed
growth outcomes (temperature windows and buffer thickness), not physics;
its output is labeled accordingly by the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DegenerateGridError, OutOfDomainError
from .spectra import Phase

GROWTH_RATE_A_PER_SHOT = 0.17


class Substrate(str, Enum):
    GAAS = "GaAs"
    GASB = "GaSb"
    SOI = "SOI"


class SurfacePrep(str, Enum):
    ARSENIC_CAPPED = "arsenic-capped"
    OXIDE_DESORBED = "oxide-desorbed"


class Doping(str, Enum):
    BULK = "bulk"
    SANDWICH = "sandwich"
    UNDOPED = "undoped"


@dataclass(frozen=True)
class HeightMap:
    heights_nm: np.ndarray  # rectangular grid
    pitch_nm: float  # nm per pixel

    def __post_init__(self):
        h = np.asarray(self.heights_nm, dtype=float)
        if h.ndim != 2:
            raise DegenerateGridError("height map must be a 2-D grid")
        if not np.all(np.isfinite(h)):
            raise DegenerateGridError("height map contains non-finite values")
        if self.pitch_nm <= 0:
            raise ConfigError("pixel pitch must be positive")
        object.__setattr__(self, "heights_nm", h)

    @property
    def scan_size_um(self) -> tuple[float, float]:
        ny, nx = self.heights_nm.shape
        return (ny * self.pitch_nm / 1000.0, nx * self.pitch_nm / 1000.0)


@dataclass(frozen=True)
class GrowthRecord:
    substrate: Substrate
    prep: SurfacePrep
    t_grow_c: float
    buffer_shots: int = 0
    doping: Doping = Doping.BULK

    def __post_init__(self):
        if not 300.0 <= self.t_grow_c <= 650.0:
            raise ConfigError(f"T_grow {self.t_grow_c} outside [300, 650] °C")
        if self.buffer_shots < 0:
            raise ConfigError("buffer_shots must be >= 0")


def rms_roughness(hmap: HeightMap, detrend: str = "plane") -> float:
    """RMS roughness in pm, after optional least-squares plane removal."""
    h = hmap.heights_nm
    if h.shape[0] < 16 or h.shape[1] < 16:
        raise DegenerateGridError(f"grid {h.shape} too small, need >= 16x16")
    if detrend not in ("none", "plane"):
        raise ConfigError("detrend must be 'none' or 'plane'")
    if detrend == "plane":
        ny, nx = h.shape
        yy, xx = np.mgrid[0:ny, 0:nx]
        A = np.column_stack([xx.ravel(), yy.ravel(), np.ones(h.size)])
        coef, *_ = np.linalg.lstsq(A, h.ravel(), rcond=None)
        h = h - (A @ coef).reshape(h.shape)
    return float(np.sqrt(np.mean((h - h.mean()) ** 2))) * 1000.0


def thickness_from_shots(shots: int, rate_a_per_shot: float = GROWTH_RATE_A_PER_SHOT) -> float:
    """Film thickness in nm from a laser-shot count (10 Å = 1 nm)."""
    if shots < 0:
        raise ConfigError("shots must be >= 0")
    return shots * rate_a_per_shot / 10.0


@dataclass(frozen=True)
class PhaseRules:
    """Thresholds for the empirical phase classifier, in priority order:

    1. T_grow >= t_rutile_c            -> Rutile
    2. buffer_shots >= rutile_buffer_shots -> Rutile
    3. T_grow inside the anatase window -> Anatase
    otherwise the record is out of the rule's domain.
    """

    t_rutile_c: float = 450.0
    rutile_buffer_shots: int = 500
    anatase_window_c: tuple[float, float] = (370.0, 400.0)


def predict_phase(record: GrowthRecord, rules: PhaseRules | None = None) -> Phase:
    rules = rules or PhaseRules()
    if record.t_grow_c >= rules.t_rutile_c:
        return Phase.RUTILE
    if record.buffer_shots >= rules.rutile_buffer_shots:
        return Phase.RUTILE
    lo, hi = rules.anatase_window_c
    if lo <= record.t_grow_c <= hi:
        return Phase.ANATASE
    raise OutOfDomainError(
        f"T_grow {record.t_grow_c} °C outside both the rutile (>= {rules.t_rutile_c})"
        f" and anatase [{lo}, {hi}] windows")
