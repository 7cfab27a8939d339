"""Analysis toolkit for oxide thin films on III-V substrates.

Modules: coincidence-lattice interface matching (mcia), diffraction
size-strain fitting (xrdfit), Raman/resonance/lifetime spectroscopy
(spectra), depth-profile diffusion fitting (profiles), oxygen-vacancy
growth kinetics (vacancysim), surface and growth statistics (filmstats).
"""

__version__ = "1.0.0"

from .crystal import (
    BUILTIN_LATTICES,
    BulkLattice,
    LatticeSystem,
    MillerIndex,
    SurfaceMesh,
    load_lattices,
    reduce_mesh,
    surface_mesh,
)
from .errors import EpifilmError
from .filmstats import (
    GrowthRecord,
    HeightMap,
    PhaseRules,
    predict_phase,
    rms_roughness,
    thickness_from_shots,
)
from .mcia import Match, MciaConfig, mcia, mcia_map
from .profiles import DepthProfile, DiffusionFit, fit_diffusion, normalize
from .spectra import (
    Phase,
    Spectrum,
    XUnit,
    classify_phase,
    detect_peaks,
    fit_lifetime,
    fit_line,
)
from .vacancysim import (
    GrowthSchedule,
    Segment,
    VacancyParams,
    reference_schedule,
    saturation_scan,
    simulate,
)
from .xrdfit import (
    DiffractionScan,
    VoigtPeak,
    bragg_d,
    fit_voigt,
    lattice_param,
    size_strain,
)

__all__ = [
    "__version__",
    "BUILTIN_LATTICES",
    "BulkLattice",
    "LatticeSystem",
    "MillerIndex",
    "SurfaceMesh",
    "load_lattices",
    "reduce_mesh",
    "surface_mesh",
    "EpifilmError",
    "GrowthRecord",
    "HeightMap",
    "PhaseRules",
    "predict_phase",
    "rms_roughness",
    "thickness_from_shots",
    "Match",
    "MciaConfig",
    "mcia",
    "mcia_map",
    "DepthProfile",
    "DiffusionFit",
    "fit_diffusion",
    "normalize",
    "Phase",
    "Spectrum",
    "XUnit",
    "classify_phase",
    "detect_peaks",
    "fit_lifetime",
    "fit_line",
    "GrowthSchedule",
    "Segment",
    "VacancyParams",
    "reference_schedule",
    "saturation_scan",
    "simulate",
    "DiffractionScan",
    "VoigtPeak",
    "bragg_d",
    "fit_voigt",
    "lattice_param",
    "size_strain",
]
