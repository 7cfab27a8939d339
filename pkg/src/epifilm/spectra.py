"""Raman phase classification, PLE resonance fitting, lifetime fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import median_filter
from scipy.optimize import curve_fit
from scipy.signal import find_peaks, peak_prominences

from .errors import ConfigError, IllPosedError, NonConvergenceError, WindowTooShortError

SPEED_OF_LIGHT = 299792458.0  # m/s


class Phase(str, Enum):
    ANATASE = "Anatase"
    RUTILE = "Rutile"
    MIXED = "Mixed"
    UNKNOWN = "Unknown"


class XUnit(str, Enum):
    WAVENUMBER = "cm-1"
    THZ = "THz"
    NM = "nm"
    SECONDS = "s"


@dataclass(frozen=True)
class Spectrum:
    x: np.ndarray
    y: np.ndarray
    unit: XUnit = XUnit.WAVENUMBER
    sample: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ConfigError("spectrum needs equal-length 1-D x and y")
        d = np.diff(x)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("x must be strictly monotone")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class PhononMode:
    label: str
    center: float  # cm^-1
    tolerance: float  # cm^-1
    weight: float = 1.0

    def __post_init__(self):
        if self.center <= 0 or self.tolerance <= 0:
            raise ConfigError("mode center and tolerance must be positive")


# Reference phonon fingerprints.  The low-frequency anatase E_g mode is the
# diagnostic one and gets double weight; it is the line whose suppression
# signals the anatase -> rutile flip in thick-buffer films.
DEFAULT_MODE_TABLE: dict[Phase, tuple[PhononMode, ...]] = {
    Phase.RUTILE: (
        PhononMode("Eg", 449.0, 8.0),
        PhononMode("A1g", 614.0, 8.0),
    ),
    Phase.ANATASE: (
        PhononMode("Eg(1)", 144.0, 8.0, weight=2.0),
        PhononMode("B1g", 399.0, 8.0),
        PhononMode("A1g", 515.0, 8.0),
        PhononMode("Eg(3)", 639.0, 8.0),
    ),
}

# GaAs substrate modes masked out before classification (TO/LO near 268/292).
DEFAULT_EXCLUDED_BANDS = ((260.0, 300.0),)

# Er visible-fluorescence band under 514 nm excitation; detected and labeled
# but never scored as a phonon mode.
ER_FLUOR_BAND = (1250.0, 1400.0)


@dataclass(frozen=True)
class LineFit:
    center_thz: float
    fwhm_ghz: float
    amplitude: float
    background: float
    model: str
    errors: dict = field(default_factory=dict, compare=False)


def detect_peaks(spec: Spectrum, min_prominence: float = 0.05):
    """Local maxima after median-baseline subtraction.

    ``min_prominence`` is a fraction of the baseline-subtracted maximum.
    Returns a list of (center, height, prominence) sorted by position.
    """
    if spec.x.size < 10:
        raise ConfigError("need at least 10 points")
    x, y = spec.x, spec.y
    if x[0] > x[-1]:
        x, y = x[::-1], y[::-1]
    win = max(5, 2 * (x.size // 20) + 1)
    baseline = median_filter(y, size=win, mode="nearest")
    yc = y - baseline
    top = float(yc.max())
    if top <= 0:
        return []
    idx, _ = find_peaks(yc, prominence=min_prominence * top)
    if idx.size == 0:
        return []
    prom = peak_prominences(yc, idx)[0]
    return [(float(x[i]), float(yc[i]), float(p)) for i, p in zip(idx, prom)]


def classify_phase(peaks, table=None, excluded_bands=DEFAULT_EXCLUDED_BANDS,
                   threshold: float = 0.5):
    """Score peak positions against the phonon table.

    ``peaks`` is a list of positions (cm^-1) or (center, height, prominence)
    tuples.  The score per phase is the weighted fraction of its modes
    matched within tolerance.  Both above threshold -> Mixed; neither ->
    Unknown.  Only positions matter, so the result is invariant under
    intensity scaling and baseline offsets.
    """
    table = table if table is not None else DEFAULT_MODE_TABLE
    positions = [p[0] if isinstance(p, (tuple, list)) else float(p) for p in peaks]
    positions = [
        p for p in positions
        if not any(lo <= p <= hi for lo, hi in excluded_bands)
        and not (ER_FLUOR_BAND[0] <= p <= ER_FLUOR_BAND[1])
    ]
    scores = {}
    for phase, modes in table.items():
        total = sum(m.weight for m in modes)
        hit = sum(m.weight for m in modes
                  if any(abs(p - m.center) <= m.tolerance for p in positions))
        scores[phase] = hit / total if total else 0.0
    above = [ph for ph, s in scores.items() if s >= threshold]
    if len(above) >= 2:
        result = Phase.MIXED
    elif len(above) == 1:
        result = above[0]
    else:
        result = Phase.UNKNOWN
    return result, scores


def label_er_fluorescence(peaks) -> list[float]:
    """Peak positions falling in the Er visible-fluorescence band."""
    positions = [p[0] if isinstance(p, (tuple, list)) else float(p) for p in peaks]
    return [p for p in positions if ER_FLUOR_BAND[0] <= p <= ER_FLUOR_BAND[1]]


def nm_to_thz(wavelength_nm):
    return SPEED_OF_LIGHT / (np.asarray(wavelength_nm) * 1e-9) / 1e12


def _gaussian(x, center, fwhm, amp, bg):
    s = np.abs(fwhm) / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return amp * np.exp(-0.5 * ((x - center) / s) ** 2) + bg


def _lorentzian(x, center, fwhm, amp, bg):
    g = np.abs(fwhm) / 2.0
    return amp * g * g / ((x - center) ** 2 + g * g) + bg


_LINE_MODELS = {"gaussian": _gaussian, "lorentzian": _lorentzian}


def fit_line(spec: Spectrum, model: str = "gaussian") -> LineFit:
    """Single-resonance fit with constant background.

    Accepts spectra in THz or nm (nm converted to THz first).  The default
    Gaussian model reflects inhomogeneous ensemble broadening; FWHM is
    reported in GHz.
    """
    if model not in _LINE_MODELS:
        raise ConfigError(f"model must be one of {sorted(_LINE_MODELS)}")
    if spec.unit == XUnit.NM:
        x = nm_to_thz(spec.x)
    elif spec.unit == XUnit.THZ:
        x = spec.x.copy()
    else:
        raise ConfigError("fit_line expects a spectrum in THz or nm")
    y = spec.y
    order = np.argsort(x)
    x, y = x[order], y[order]
    if x.size < 10:
        raise IllPosedError("too few points for a line fit")
    bg0 = float(np.median(np.concatenate([y[:3], y[-3:]])))
    i_max = int(np.argmax(y))
    amp0 = float(y[i_max] - bg0)
    if amp0 <= 0:
        raise IllPosedError("no resonance above background")
    above = np.where(y - bg0 > amp0 / 2.0)[0]
    fwhm0 = max(float(x[above[-1]] - x[above[0]]), float(np.mean(np.diff(x))))
    fn = _LINE_MODELS[model]
    try:
        popt, pcov = curve_fit(fn, x, y, p0=[x[i_max], fwhm0, amp0, bg0],
                               method="lm", maxfev=2000)
    except RuntimeError as exc:
        raise NonConvergenceError(str(exc)) from exc
    perr = np.sqrt(np.abs(np.diag(pcov)))
    return LineFit(
        center_thz=float(popt[0]),
        fwhm_ghz=float(abs(popt[1]) * 1e3),
        amplitude=float(popt[2]),
        background=float(popt[3]),
        model=model,
        errors={"center_thz": float(perr[0]), "fwhm_ghz": float(perr[1] * 1e3)},
    )


def fit_lifetime(decay: Spectrum):
    """Single-exponential + constant background fit of a decay trace.

    Requires the trace to span at least 3 estimated lifetimes.  Returns
    (T1_ms, T1_err_ms, amplitude, background).
    """
    if decay.unit != XUnit.SECONDS:
        raise ConfigError("lifetime fit expects x in seconds")
    t, y = decay.x, decay.y
    bg0 = float(np.median(y[-max(3, t.size // 20):]))
    amp0 = float(y[0] - bg0)
    if amp0 <= 0:
        raise IllPosedError("decay trace does not decay")
    # crude tau from the 1/e crossing
    below = np.where(y - bg0 < amp0 / math.e)[0]
    tau0 = float(t[below[0]] - t[0]) if below.size else float(t[-1] - t[0])
    if t[-1] - t[0] < 3.0 * tau0:
        raise WindowTooShortError(
            f"trace spans {(t[-1]-t[0])/tau0:.1f} lifetimes, need >= 3")

    def fn(tt, tau, amp, bg):
        return amp * np.exp(-(tt - t[0]) / np.abs(tau)) + bg

    try:
        popt, pcov = curve_fit(fn, t, y, p0=[tau0, amp0, bg0],
                               method="lm", maxfev=2000)
    except RuntimeError as exc:
        raise NonConvergenceError(str(exc)) from exc
    tau, amp, bg = popt
    tau_err = float(np.sqrt(np.abs(pcov[0, 0])))
    return float(abs(tau) * 1e3), tau_err * 1e3, float(amp), float(bg)
