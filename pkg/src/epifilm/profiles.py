"""EELS depth-profile normalization and erfc interdiffusion fitting.

Diffusion-length convention: L = 2*sqrt(D*t), the constant-source erfc
solution, so D = L^2 / (4 t).  The thermal-budget time defaults to 3000 s
(about 20 minutes of growth plus a 30-minute anneal at reduced effective
temperature); it is a configurable convention, not a measured quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import erfc

from .errors import (
    AllZeroChannelError,
    ConfigError,
    MonotonicityViolationError,
    NonConvergenceError,
)

DEFAULT_THERMAL_TIME_S = 3000.0
NM2_PER_S_TO_CM2_PER_S = 1e-14


@dataclass(frozen=True)
class DepthProfile:
    """Signed depth axis (nm, zero near the nominal interface) plus one
    normalized intensity channel per element."""

    z: np.ndarray
    channels: dict[str, np.ndarray]

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        d = np.diff(z)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("z must be monotone")
        chans = {}
        for name, values in self.channels.items():
            v = np.asarray(values, dtype=float)
            if v.shape != z.shape:
                raise ConfigError(f"channel {name!r} length mismatch")
            chans[name] = v
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "channels", chans)


@dataclass(frozen=True)
class DiffusionFit:
    length_nm: float  # L = 2 sqrt(D t)
    d_cm2_s: float
    c0: float
    z0_nm: float
    baseline: float
    time_s: float
    residual_rms: float
    sharp_interface: bool = False  # L at the grid-resolution floor
    errors: dict = field(default_factory=dict, compare=False)


def normalize(z, raw_channels: dict) -> DepthProfile:
    """Divide each channel by its own maximum so every channel peaks at 1."""
    chans = {}
    for name, values in raw_channels.items():
        v = np.asarray(values, dtype=float)
        if np.any(v < 0):
            raise ConfigError(f"channel {name!r} has negative counts")
        top = v.max() if v.size else 0.0
        if top <= 0:
            raise AllZeroChannelError(f"channel {name!r} has no positive counts")
        chans[name] = v / top
    return DepthProfile(z=np.asarray(z, dtype=float), channels=chans)


def _erfc_model(z, c0, length, z0, baseline):
    return 0.5 * c0 * erfc((z - z0) / np.abs(length)) + baseline


def fit_diffusion(profile: DepthProfile, element: str,
                  t: float = DEFAULT_THERMAL_TIME_S,
                  fit_window: tuple[float, float] | None = None) -> DiffusionFit:
    """Fit c(z) = c0/2 * erfc((z - z0)/L) + baseline to one element channel.

    The channel must fall from high to low across the interface region.
    ``fit_window`` restricts the fitted z range, e.g. to exclude an
    accumulation bump.  D is reported in cm^2/s via D = L^2/(4t).
    """
    if t <= 0:
        raise ConfigError("thermal-budget time must be positive")
    if element not in profile.channels:
        raise ConfigError(f"no channel {element!r}; have {sorted(profile.channels)}")
    z = profile.z
    c = profile.channels[element]
    if z[0] > z[-1]:
        z, c = z[::-1], c[::-1]
    if fit_window is not None:
        sel = (z >= fit_window[0]) & (z <= fit_window[1])
        z, c = z[sel], c[sel]
    if z.size < 8:
        raise ConfigError("too few points in fit window")

    n_edge = max(3, z.size // 10)
    high = float(np.mean(c[:n_edge]))
    low = float(np.mean(c[-n_edge:]))
    if high - low < 3.0 * float(np.std(np.diff(c)) / math.sqrt(2.0)):
        raise MonotonicityViolationError(
            "channel is not step-like: no clear high-to-low transition")

    # initial interface guess at the half-maximum crossing
    half = low + 0.5 * (high - low)
    below = np.where(c < half)[0]
    z0_guess = float(z[below[0]]) if below.size else float(z[z.size // 2])
    dz = float(np.min(np.abs(np.diff(z))))
    p0 = [high - low, max(2.0 * dz, 1.0), z0_guess, low]
    try:
        popt, pcov = curve_fit(_erfc_model, z, c, p0=p0, method="lm", maxfev=5000)
    except RuntimeError as exc:
        raise NonConvergenceError(str(exc)) from exc
    c0, length, z0, baseline = popt
    length = abs(float(length))
    perr = np.sqrt(np.abs(np.diag(pcov)))
    resid = c - _erfc_model(z, *popt)
    sharp = length <= dz
    d_nm2_s = length**2 / (4.0 * t)
    return DiffusionFit(
        length_nm=length,
        d_cm2_s=d_nm2_s * NM2_PER_S_TO_CM2_PER_S,
        c0=float(c0),
        z0_nm=float(z0),
        baseline=float(baseline),
        time_s=float(t),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        sharp_interface=bool(sharp),
        errors={"length_nm": float(perr[1]), "z0_nm": float(perr[2])},
    )


def diffusion_length_nm(d_cm2_s: float, t: float) -> float:
    """L = 2 sqrt(D t), with D in cm^2/s and the result in nm."""
    return 2.0 * math.sqrt(d_cm2_s / NM2_PER_S_TO_CM2_PER_S * t)
