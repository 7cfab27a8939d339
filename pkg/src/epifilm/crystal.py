"""Crystal translation lattices and their 2-D surface meshes.

A surface mesh is the 2-D lattice of bulk translation vectors lying in a
given (hkl) plane.  Coincidence analysis works on the PRIMITIVE translation
lattice (FCC for zincblende and diamond, body-centred tetragonal for
anatase), because physical periodicity, not the conventional cell, governs
which supercells can coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError


class LatticeSystem(str, Enum):
    CUBIC_FCC = "cubic-FCC"
    CUBIC_DIAMOND_FCC = "cubic-diamond-FCC"
    TETRAGONAL_P = "tetragonal-P"
    TETRAGONAL_I = "tetragonal-I"


# Primitive basis vectors in conventional-cell coordinates, doubled so the
# entries are exact integers (actual coefficient = value / 2).
_PRIMITIVE_COEFFS_X2 = {
    LatticeSystem.CUBIC_FCC: np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]),
    LatticeSystem.CUBIC_DIAMOND_FCC: np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]]),
    LatticeSystem.TETRAGONAL_P: np.array([[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
    LatticeSystem.TETRAGONAL_I: np.array([[2, 0, 0], [0, 2, 0], [1, 1, 1]]),
}


@dataclass(frozen=True)
class BulkLattice:
    """A 3-D crystal translation lattice."""

    name: str
    system: LatticeSystem
    a: float
    c: float | None = None

    def __post_init__(self):
        if self.a <= 0:
            raise ConfigError(f"lattice constant a must be positive, got {self.a}")
        if self.c is None:
            if self.system in (LatticeSystem.TETRAGONAL_P, LatticeSystem.TETRAGONAL_I):
                raise ConfigError(f"tetragonal lattice {self.name!r} needs c")
            object.__setattr__(self, "c", self.a)
        if self.c <= 0:
            raise ConfigError(f"lattice constant c must be positive, got {self.c}")

    def primitive_vectors(self) -> np.ndarray:
        """Rows are the primitive translation vectors in cartesian Å."""
        coeffs = _PRIMITIVE_COEFFS_X2[self.system] / 2.0
        return coeffs * np.array([self.a, self.a, self.c])


@dataclass(frozen=True)
class MillerIndex:
    """gcd-reduced Miller index with first nonzero component positive."""

    h: int
    k: int
    l: int

    def __post_init__(self):
        hkl = (self.h, self.k, self.l)
        if hkl == (0, 0, 0):
            raise ConfigError("Miller index (0,0,0) is not a plane")
        g = math.gcd(math.gcd(abs(self.h), abs(self.k)), abs(self.l))
        hkl = tuple(x // g for x in hkl)
        first = next(x for x in hkl if x != 0)
        if first < 0:
            hkl = tuple(-x for x in hkl)
        object.__setattr__(self, "h", hkl[0])
        object.__setattr__(self, "k", hkl[1])
        object.__setattr__(self, "l", hkl[2])

    @classmethod
    def parse(cls, text: str) -> "MillerIndex":
        """Parse '110', '1,1,0' or '1 1 0' (single digits only in compact form)."""
        text = text.strip()
        if "," in text:
            parts = [int(p) for p in text.split(",")]
        elif " " in text:
            parts = [int(p) for p in text.split()]
        else:
            parts = [int(ch) for ch in text]
        if len(parts) != 3:
            raise ConfigError(f"cannot parse Miller index from {text!r}")
        return cls(*parts)

    def __str__(self):
        return f"{self.h}{self.k}{self.l}"


@dataclass(frozen=True)
class SurfaceMesh:
    """Lagrange-reduced 2-D basis of the in-plane translation lattice.

    ``u`` lies along +x and ``u, v`` form a right-handed pair, so the mesh is
    a deterministic function of (lattice, plane).
    """

    u: tuple[float, float]
    v: tuple[float, float]
    source: tuple[BulkLattice, MillerIndex] | None = field(default=None, compare=False)

    @property
    def basis(self) -> np.ndarray:
        """2x2 matrix with u, v as columns."""
        return np.array([self.u, self.v]).T

    @property
    def area(self) -> float:
        return abs(self.u[0] * self.v[1] - self.u[1] * self.v[0])

    def __str__(self):
        src = ""
        if self.source is not None:
            src = f" [{self.source[0].name}({self.source[1]})]"
        return (f"SurfaceMesh(|u|={np.hypot(*self.u):.4f} Å, "
                f"|v|={np.hypot(*self.v):.4f} Å, area={self.area:.3f} Å²){src}")


def _lagrange_reduce(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Lagrange reduction; works for vectors of any dimension."""
    u = np.asarray(u, dtype=float).copy()
    v = np.asarray(v, dtype=float).copy()
    while True:
        if u @ u > v @ v:
            u, v = v, u
        r = round((u @ v) / (u @ u))
        v = v - r * u
        if v @ v >= u @ u:
            break
    return u, v


def reduce_mesh(u, v) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-reduce a 2-D basis.  Preserves the spanned lattice and area.

    Raises ConfigError on a degenerate (parallel) input pair.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = max(u @ u, v @ v)
    det = u[0] * v[1] - u[1] * v[0]
    if scale == 0 or abs(det) < 1e-12 * scale:
        raise ConfigError("degenerate basis: vectors are parallel or zero")
    return _lagrange_reduce(u, v)


def _integer_kernel_basis(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Basis of the rank-2 integer solution lattice of m·x = 0, gcd(m)=1."""
    m1, m2, m3 = (int(x) for x in m)
    if m2 == 0 and m3 == 0:
        return np.array([0, 1, 0]), np.array([0, 0, 1])
    g1 = math.gcd(m2, m3)
    v1 = np.array([0, m3 // g1, -m2 // g1])
    # extended gcd: u*m2 + w*m3 = g1
    old_r, r = m2, m3
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    u_c, w_c = old_s, old_t
    if old_r < 0:
        u_c, w_c = -u_c, -w_c
    v2 = np.array([g1, -u_c * m1, -w_c * m1])
    assert m1 * v2[0] + m2 * v2[1] + m3 * v2[2] == 0
    return v1, v2


def surface_mesh(lattice: BulkLattice, plane: MillerIndex) -> SurfaceMesh:
    """Two shortest independent lattice translations in the (hkl) plane.

    The Miller index refers to the conventional cell; the translations come
    from the primitive lattice.  The returned basis is Lagrange-reduced, with
    u along +x and positive cross product.
    """
    hkl = np.array([plane.h, plane.k, plane.l])
    coeffs2 = _PRIMITIVE_COEFFS_X2[lattice.system]
    # m_i = 2 * (p_i · G); exactly integer because primitive coefficients are halves
    m = coeffs2 @ hkl
    g = math.gcd(math.gcd(abs(int(m[0])), abs(int(m[1]))), abs(int(m[2])))
    m = m // g
    k1, k2 = _integer_kernel_basis(m)

    P = lattice.primitive_vectors()
    u3, v3 = _lagrange_reduce(k1 @ P, k2 @ P)

    # in-plane frame: u along +x, right-handed w.r.t. the outward plane normal
    n = hkl / np.array([lattice.a, lattice.a, lattice.c])
    n = n / np.linalg.norm(n)
    e1 = u3 / np.linalg.norm(u3)
    e2 = np.cross(n, e1)
    u2 = np.array([np.linalg.norm(u3), 0.0])
    v2 = np.array([v3 @ e1, v3 @ e2])
    if v2[1] < 0:
        v2 = -v2
        r = round((u2 @ v2) / (u2 @ u2))
        v2 = v2 - r * u2
    return SurfaceMesh(u=tuple(u2), v=tuple(v2), source=(lattice, plane))


# Reference lattice constants (Å); overridable via config.
BUILTIN_LATTICES = {
    "gaas": BulkLattice("GaAs", LatticeSystem.CUBIC_FCC, a=5.6533),
    "gasb": BulkLattice("GaSb", LatticeSystem.CUBIC_FCC, a=6.0959),
    "si": BulkLattice("Si", LatticeSystem.CUBIC_DIAMOND_FCC, a=5.431),
    "rutile": BulkLattice("rutile-TiO2", LatticeSystem.TETRAGONAL_P, a=4.594, c=2.959),
    "anatase": BulkLattice("anatase-TiO2", LatticeSystem.TETRAGONAL_I, a=3.785, c=9.514),
}


def load_lattices(path) -> dict[str, BulkLattice]:
    """Load lattice definitions from a key/value text config.

    Format: one ``[section]`` per material with ``name``, ``system``, ``a``
    and optionally ``c`` keys (TOML).  Returns builtins updated with the
    file's entries.
    """
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib

    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse lattice config {path}: {exc}") from exc
    lattices = dict(BUILTIN_LATTICES)
    for key, entry in data.items():
        if not isinstance(entry, dict):
            raise ConfigError(f"lattice entry {key!r} must be a table")
        unknown = set(entry) - {"name", "system", "a", "c"}
        if unknown:
            raise ConfigError(f"unknown keys in lattice {key!r}: {sorted(unknown)}")
        try:
            system = LatticeSystem(entry["system"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"lattice {key!r}: bad or missing system") from exc
        if "a" not in entry:
            raise ConfigError(f"lattice {key!r}: missing a")
        lattices[key.lower()] = BulkLattice(
            name=entry.get("name", key),
            system=system,
            a=float(entry["a"]),
            c=float(entry["c"]) if "c" in entry else None,
        )
    return lattices
