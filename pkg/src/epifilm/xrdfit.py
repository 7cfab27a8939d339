"""Voigt peak fitting and Scherrer/Wilson size-strain extraction.

The Voigt profile is evaluated through the Faddeeva function w(z)
(scipy.special.wofz, a rational approximation of the complex error
function accurate to better than 1e-13 relative), so the lineshape is a
true Gaussian-Lorentzian convolution, not a pseudo-Voigt.

Single-line decomposition: the Lorentzian integral breadth carries the
size broadening (Scherrer) and the Gaussian integral breadth the strain
broadening (Wilson).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import wofz

from .crystal import LatticeSystem, MillerIndex
from .errors import (
    ConfigError,
    DegenerateBreadthError,
    IllPosedError,
    NonConvergenceError,
)

CU_KALPHA1 = 1.540598  # Å

_SQRT_LN2 = math.sqrt(math.log(2.0))
# integral breadth / FWHM for the pure Gaussian and Lorentzian limits
_BETA_G_OVER_FWHM = 0.5 * math.sqrt(math.pi / math.log(2.0))
_BETA_L_OVER_FWHM = math.pi / 2.0


@dataclass(frozen=True)
class DiffractionScan:
    """A theta-2theta scan: strictly increasing 2theta (deg), counts >= 0."""

    two_theta: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        tt = np.asarray(self.two_theta, dtype=float)
        it = np.asarray(self.intensity, dtype=float)
        if tt.ndim != 1 or tt.shape != it.shape:
            raise ConfigError("scan must be two equal-length 1-D arrays")
        if not np.all(np.diff(tt) > 0):
            raise ConfigError("two_theta must be strictly increasing")
        if np.any(it < 0):
            raise ConfigError("intensities must be nonnegative")
        object.__setattr__(self, "two_theta", tt)
        object.__setattr__(self, "intensity", it)

    def window(self, lo: float, hi: float) -> "DiffractionScan":
        sel = (self.two_theta >= lo) & (self.two_theta <= hi)
        return DiffractionScan(self.two_theta[sel], self.intensity[sel])


@dataclass(frozen=True)
class VoigtPeak:
    center: float  # deg 2theta
    fwhm_g: float  # deg
    fwhm_l: float  # deg
    amplitude: float  # peak counts above background
    background: tuple[float, float]  # (slope, offset)
    errors: dict = field(default_factory=dict, compare=False)
    residual_rms: float = 0.0


@dataclass(frozen=True)
class SizeStrainResult:
    tau_nm: float
    tau_err_nm: float
    epsilon_pct: float
    epsilon_err_pct: float
    wavelength: float
    scherrer_k: float


def voigt_profile(x, center, fwhm_g, fwhm_l, amplitude):
    """Area-free Voigt, normalized to `amplitude` at the center."""
    sigma = max(fwhm_g, 1e-12) / (2.0 * math.sqrt(2.0) * _SQRT_LN2)
    gamma = max(fwhm_l, 0.0) / 2.0
    z = ((np.asarray(x) - center) + 1j * gamma) / (sigma * math.sqrt(2.0))
    z0 = (1j * gamma) / (sigma * math.sqrt(2.0))
    return amplitude * wofz(z).real / wofz(z0).real


def _model(x, center, fwhm_g, fwhm_l, amplitude, slope, offset):
    return voigt_profile(x, center, abs(fwhm_g), abs(fwhm_l), amplitude) \
        + slope * (x - x.mean()) + offset


def fit_voigt(scan: DiffractionScan, window: tuple[float, float]) -> VoigtPeak:
    """Least-squares Voigt + linear background fit inside ``window``.

    Initial guesses come from the centroid and half-height width of the
    background-subtracted data.  Raises IllPosedError when there is no
    clear peak (amplitude < 3x noise, or peak at the window edge) and
    NonConvergenceError when the optimizer hits its iteration cap.
    """
    lo, hi = window
    sub = scan.window(lo, hi)
    x, y = sub.two_theta, sub.intensity
    if x.size < 20:
        raise IllPosedError(f"need >= 20 points in window, got {x.size}")

    base = 0.5 * (np.median(y[: max(3, x.size // 10)])
                  + np.median(y[-max(3, x.size // 10):]))
    yc = y - base
    i_max = int(np.argmax(yc))
    amp0 = float(yc[i_max])
    noise = float(np.std(np.diff(y))) / math.sqrt(2.0)
    if amp0 < 5.0 * max(noise, 1e-30):
        raise IllPosedError("no peak: amplitude below 5x noise estimate")
    span = x[-1] - x[0]
    if x[i_max] < x[0] + 0.05 * span or x[i_max] > x[-1] - 0.05 * span:
        raise IllPosedError("peak maximum lies at the window edge")

    above = np.where(yc > amp0 / 2.0)[0]
    fwhm0 = max(float(x[above[-1]] - x[above[0]]), float(np.mean(np.diff(x))))
    p0 = [float(x[i_max]), 0.7 * fwhm0, 0.3 * fwhm0, amp0, 0.0, base]
    try:
        popt, pcov = curve_fit(_model, x, y, p0=p0, method="lm",
                               maxfev=200 * (len(p0) + 1), xtol=1e-9, ftol=1e-9)
    except RuntimeError as exc:
        raise NonConvergenceError(str(exc)) from exc
    center, fg, fl, amp, slope, offset = popt
    fg, fl = abs(fg), abs(fl)
    if not lo < center < hi:
        raise IllPosedError("fitted center left the window")
    perr = np.sqrt(np.abs(np.diag(pcov)))
    resid = y - _model(x, *popt)
    return VoigtPeak(
        center=float(center),
        fwhm_g=float(fg),
        fwhm_l=float(fl),
        amplitude=float(amp),
        background=(float(slope), float(offset)),
        errors={
            "center": float(perr[0]),
            "fwhm_g": float(perr[1]),
            "fwhm_l": float(perr[2]),
            "amplitude": float(perr[3]),
        },
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


def integral_breadths(peak: VoigtPeak) -> tuple[float, float]:
    """(beta_G, beta_L) integral breadths in radians."""
    beta_g = math.radians(peak.fwhm_g) * _BETA_G_OVER_FWHM
    beta_l = math.radians(peak.fwhm_l) * _BETA_L_OVER_FWHM
    return beta_g, beta_l


def size_strain(peak: VoigtPeak, wavelength: float = CU_KALPHA1,
                k: float = 0.9) -> SizeStrainResult:
    """Scherrer grain size and Wilson microstrain from one Voigt peak.

    tau = K * lambda / (beta_L cos(theta)), epsilon = beta_G / (4 tan(theta)),
    with the breadths as integral breadths in radians and theta = center / 2.
    Uncertainties are first-order propagated from the FWHM fit errors.
    """
    if wavelength <= 0:
        raise ConfigError("wavelength must be positive")
    beta_g, beta_l = integral_breadths(peak)
    sig_g = math.radians(peak.errors.get("fwhm_g", 0.0)) * _BETA_G_OVER_FWHM
    sig_l = math.radians(peak.errors.get("fwhm_l", 0.0)) * _BETA_L_OVER_FWHM
    if beta_l <= sig_l or beta_l <= 0:
        raise DegenerateBreadthError("Lorentzian breadth zero within uncertainty")
    if beta_g <= sig_g or beta_g <= 0:
        raise DegenerateBreadthError("Gaussian breadth zero within uncertainty")
    theta = math.radians(peak.center / 2.0)
    tau_ang = k * wavelength / (beta_l * math.cos(theta))  # Å
    eps = beta_g / (4.0 * math.tan(theta))
    tau_nm = tau_ang / 10.0
    return SizeStrainResult(
        tau_nm=tau_nm,
        tau_err_nm=tau_nm * sig_l / beta_l,
        epsilon_pct=100.0 * eps,
        epsilon_err_pct=100.0 * eps * sig_g / beta_g,
        wavelength=wavelength,
        scherrer_k=k,
    )


def breadths_for(tau_nm: float, epsilon_pct: float, two_theta: float,
                 wavelength: float = CU_KALPHA1, k: float = 0.9) -> tuple[float, float]:
    """Invert the size-strain relations: (fwhm_G, fwhm_L) in degrees 2theta."""
    theta = math.radians(two_theta / 2.0)
    beta_l = k * wavelength / (tau_nm * 10.0 * math.cos(theta))
    beta_g = 4.0 * math.tan(theta) * epsilon_pct / 100.0
    return (math.degrees(beta_g / _BETA_G_OVER_FWHM),
            math.degrees(beta_l / _BETA_L_OVER_FWHM))


def bragg_d(two_theta: float, wavelength: float = CU_KALPHA1) -> float:
    """Interplanar spacing d = lambda / (2 sin theta), in Å."""
    if not 0.0 < two_theta < 180.0:
        raise ConfigError(f"two_theta must be in (0, 180), got {two_theta}")
    return wavelength / (2.0 * math.sin(math.radians(two_theta / 2.0)))


def lattice_param(d: float, reflection, system: LatticeSystem,
                  c_over_a: float | None = None) -> float:
    """Lattice parameter implied by a d-spacing.

    ``reflection`` is the diffraction order as an (h, k, l) tuple; unlike a
    plane index it is NOT gcd-reduced, since (004) and (001) give different
    answers.  Cubic: a = d * sqrt(h^2+k^2+l^2).  Tetragonal (00l): c = l * d;
    other tetragonal reflections need the axial ratio, in which case a is
    returned.
    """
    if isinstance(reflection, MillerIndex):
        h, k, l = reflection.h, reflection.k, reflection.l
    else:
        h, k, l = (int(x) for x in reflection)
    if (h, k, l) == (0, 0, 0):
        raise ConfigError("reflection (0,0,0) has no d-spacing")
    if system in (LatticeSystem.CUBIC_FCC, LatticeSystem.CUBIC_DIAMOND_FCC):
        return d * math.sqrt(h * h + k * k + l * l)
    if (h, k) == (0, 0):
        return abs(l) * d
    if c_over_a is None:
        raise ConfigError("tetragonal (hkl) with h or k nonzero needs c_over_a")
    return d * math.sqrt(h * h + k * k + (l / c_over_a) ** 2)
