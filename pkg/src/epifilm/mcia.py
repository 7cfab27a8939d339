"""Minimal coincident interface area search between two surface meshes.

For each pair of supercell indices (n_sub, n_film) with compatible areas,
every index-n sublattice of each mesh is enumerated in Hermite normal form,
both supercell bases are Lagrange-reduced, and the unique linear map taking
the film supercell onto the substrate supercell is solved exactly for every
small unimodular re-pairing of the reduced basis vectors.  The misfit is the
largest deviation of the map's singular values (principal strains) from 1,
so relative rotation needs no gridded scan.  Iterating n_sub in ascending
order makes the first feasible n_sub the global area minimum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .crystal import SurfaceMesh, _lagrange_reduce
from .errors import ConfigError, NoMatchError


@dataclass(frozen=True)
class MciaConfig:
    """Search tolerances.

    The strain tolerance and area cap are calibration knobs: the defaults
    were tuned against the reference interface areas for the TiO2-on-III-V
    systems this toolkit was built around (see README for the calibration
    and its known limits).
    """

    max_area: float = 700.0
    max_linear_strain: float = 0.007
    max_index: int = 40
    rotation_step: float | None = None  # None = exact vector-pair matching

    def __post_init__(self):
        if self.max_area <= 0:
            raise ConfigError("max_area must be positive")
        if not 0 < self.max_linear_strain < 0.5:
            raise ConfigError("max_linear_strain must be in (0, 0.5)")
        if self.max_index < 1:
            raise ConfigError("max_index must be >= 1")


@dataclass(frozen=True)
class Match:
    """A coincident substrate/film supercell pair."""

    m_sub: tuple[tuple[int, int], tuple[int, int]]
    m_film: tuple[tuple[int, int], tuple[int, int]]
    rotation_deg: float
    strain: np.ndarray = field(compare=False)
    area: float
    misfit: float

    @property
    def n_sub(self) -> int:
        m = self.m_sub
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]

    @property
    def n_film(self) -> int:
        m = self.m_film
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def enumerate_sublattices(n: int) -> list[np.ndarray]:
    """All distinct index-n sublattices of a 2-D lattice.

    Each sublattice appears once, as the Hermite-normal-form row matrix
    [[a, b], [0, d]] with a*d = n and 0 <= b < d; the rows are coefficients
    of the sublattice basis in the parent basis.  The count is sigma(n),
    the sum of divisors.
    """
    if n < 1:
        raise ConfigError(f"sublattice index must be >= 1, got {n}")
    out = []
    for a in range(1, n + 1):
        if n % a:
            continue
        d = n // a
        for b in range(d):
            out.append(np.array([[a, b], [0, d]]))
    return out


def _unimodular_set() -> np.ndarray:
    """All 2x2 integer matrices with entries in {-1,0,1} and det = ±1."""
    mats = []
    for a, b, c, d in itertools.product((-1, 0, 1), repeat=4):
        if abs(a * d - b * c) == 1:
            mats.append([[a, b], [c, d]])
    return np.array(mats)


_UNIMODULAR = _unimodular_set()


def _reduced_supercell_bases(mesh: SurfaceMesh, n: int) -> tuple[list, np.ndarray]:
    """HNF matrices and Lagrange-reduced column-basis matrices for index n."""
    B = mesh.basis  # columns u, v
    hnfs = enumerate_sublattices(n)
    bases = np.empty((len(hnfs), 2, 2))
    for i, M in enumerate(hnfs):
        S = B @ M.T  # columns are the supercell basis vectors
        u, v = _lagrange_reduce(S[:, 0], S[:, 1])
        bases[i] = np.column_stack([u, v])
    return hnfs, bases


def _singular_values(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form singular values of a (...,2,2) stack, smax >= smin."""
    a = T[..., 0, 0]
    b = T[..., 0, 1]
    c = T[..., 1, 0]
    d = T[..., 1, 1]
    q1 = a * a + b * b + c * c + d * d
    q2 = np.hypot(a * a + b * b - c * c - d * d, 2 * (a * c + b * d))
    smax = np.sqrt(np.maximum(q1 + q2, 0.0) / 2.0)
    smin = np.sqrt(np.maximum(q1 - q2, 0.0) / 2.0)
    return smax, smin


def _inv2(T: np.ndarray) -> np.ndarray:
    det = T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] * T[..., 1, 0]
    inv = np.empty_like(T)
    inv[..., 0, 0] = T[..., 1, 1]
    inv[..., 0, 1] = -T[..., 0, 1]
    inv[..., 1, 0] = -T[..., 1, 0]
    inv[..., 1, 1] = T[..., 0, 0]
    return inv / det[..., None, None]


def mcia(substrate: SurfaceMesh, film: SurfaceMesh, cfg: MciaConfig | None = None) -> Match:
    """Smallest-area coincident supercell pair within the strain tolerance.

    Ties are broken by misfit, then by enumeration order (n_film, substrate
    HNF, film HNF), which is a total order, so the result is deterministic
    and independent of any parallel evaluation strategy.

    Raises NoMatchError when no candidate satisfies the tolerances within
    the area cap.
    """
    cfg = cfg or MciaConfig()
    area_s = substrate.area
    area_f = film.area
    tol = cfg.max_linear_strain
    det_lo = (1.0 - tol) ** 2
    det_hi = (1.0 + tol) ** 2

    max_n_sub = min(int(cfg.max_area / area_s), cfg.max_index)
    film_cache: dict[int, tuple] = {}
    for n_s in range(1, max_n_sub + 1):
        target = n_s * area_s
        nf_lo = max(1, int(np.ceil(target / (area_f * det_hi))))
        nf_hi = min(int(np.floor(target / (area_f * det_lo))), cfg.max_index)
        if nf_hi < nf_lo:
            continue
        hnf_s, bases_s = _reduced_supercell_bases(substrate, n_s)
        best = None  # (misfit, n_f, i_s, i_f, i_u, T)
        for n_f in range(nf_lo, nf_hi + 1):
            if n_f not in film_cache:
                film_cache[n_f] = _reduced_supercell_bases(film, n_f)
            hnf_f, bases_f = film_cache[n_f]
            # film bases re-paired by every small unimodular matrix
            FU = np.einsum("fij,ujk->fuik", bases_f, _UNIMODULAR.astype(float))
            T = np.einsum("sij,fujk->sfuik", bases_s, _inv2(FU))
            smax, smin = _singular_values(T)
            misfit = np.maximum(np.abs(smax - 1.0), np.abs(smin - 1.0))
            ok = misfit <= tol
            if not ok.any():
                continue
            flat = np.where(ok.ravel(), misfit.ravel(), np.inf)
            idx = int(np.argmin(flat))
            i_s, i_f, i_u = np.unravel_index(idx, misfit.shape)
            cand = (float(misfit[i_s, i_f, i_u]), n_f, int(i_s), int(i_f), int(i_u))
            if best is None or cand < best[:5]:
                best = cand + (T[i_s, i_f, i_u].copy(), hnf_s[i_s], hnf_f[i_f], _UNIMODULAR[i_u])
        if best is not None:
            mis, n_f, i_s, i_f, i_u, T, M_s, M_f, U = best
            # polar decomposition T = R @ S
            W, sig, Vt = np.linalg.svd(T)
            R = W @ Vt
            S = Vt.T @ np.diag(sig) @ Vt
            if np.linalg.det(R) < 0:  # mirror match; report the improper angle as-is
                pass
            angle = float(np.degrees(np.arctan2(R[1, 0], R[0, 0])))
            # fold U into the film HNF so m_film alone describes the matched supercell
            M_f_eff = U.T @ M_f
            if np.linalg.det(M_f_eff) < 0:
                M_f_eff = np.array([[1, 0], [0, -1]]) @ M_f_eff
            return Match(
                m_sub=tuple(map(tuple, M_s.tolist())),
                m_film=tuple(map(tuple, M_f_eff.astype(int).tolist())),
                rotation_deg=angle,
                strain=S,
                area=float(n_s * area_s),
                misfit=mis,
            )
    raise NoMatchError(
        f"no coincidence within strain {tol} and area cap {cfg.max_area} Å²"
    )


@dataclass(frozen=True)
class MapRow:
    substrate: str
    film: str
    plane: str
    area: float | None
    misfit: float | None
    n_sub: int | None
    n_film: int | None
    is_minimum: bool = False


def mcia_map(substrates, films, cfg: MciaConfig | None = None) -> list[MapRow]:
    """One MCIA result per (substrate mesh, film lattice, film plane).

    ``substrates`` is a list of SurfaceMesh; ``films`` a list of
    (BulkLattice, [MillerIndex, ...]).  Rows with no match carry None areas;
    the minimal row per (substrate, film) pair is flagged.
    """
    from .crystal import surface_mesh

    if not substrates or not films:
        raise ConfigError("substrates and films must be nonempty")
    cfg = cfg or MciaConfig()
    rows = []
    for sub in substrates:
        sub_name = sub.source[0].name if sub.source else "substrate"
        for film_lat, planes in films:
            group = []
            for plane in planes:
                mesh = surface_mesh(film_lat, plane)
                try:
                    m = mcia(sub, mesh, cfg)
                    row = MapRow(sub_name, film_lat.name, str(plane),
                                 m.area, m.misfit, m.n_sub, m.n_film)
                except NoMatchError:
                    row = MapRow(sub_name, film_lat.name, str(plane),
                                 None, None, None, None)
                group.append(row)
            areas = [r.area for r in group if r.area is not None]
            if areas:
                amin = min(areas)
                group = [
                    MapRow(r.substrate, r.film, r.plane, r.area, r.misfit,
                           r.n_sub, r.n_film, is_minimum=(r.area == amin))
                    for r in group
                ]
            rows.extend(group)
    return rows
