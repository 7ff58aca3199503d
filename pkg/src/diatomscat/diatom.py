"""Rovibrational levels of an isolated diatomic molecule.

Bound states of the radial equation

    -hbar^2/(2 mu) chi'' + [V(r) + hbar^2 j(j+1)/(2 mu r^2)] chi = E chi

are found by Numerov shooting on a uniform grid with hard walls at both grid
ends.  The eigenvalue is bracketed by Sturm node counting and refined with
Brent's method; the wavefunction is assembled from an outward and an inward
integration matched at the outer classical turning point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .units import H_ATOM_MASS, hbar2_2mu

logger = logging.getLogger(__name__)


class NoSuchLevelError(ValueError):
    """Requested (v, j) level is not bound on the given curve and grid."""


class ConvergenceError(RuntimeError):
    """The eigenvalue search did not meet its tolerance."""


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    n_points: int

    def __post_init__(self):
        if not self.r_max > self.r_min:
            raise ValueError("grid requires r_max > r_min")
        if self.n_points < 3:
            raise ValueError("grid requires at least 3 points")

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n_points)

    @property
    def step(self) -> float:
        return (self.r_max - self.r_min) / (self.n_points - 1)

    def refined(self, factor: int) -> "GridSpec":
        return GridSpec(self.r_min, self.r_max, factor * (self.n_points - 1) + 1)


@dataclass(frozen=True)
class DiatomCurve:
    """Monomer potential curve, either Morse or tabulated, plus reduced mass in u.

    Energies are in cm^-1 relative to the curve minimum (Morse) or to the
    tabulated zero; lengths in angstrom.
    """

    reduced_mass: float
    kind: str = "morse"
    d_e: float = 0.0
    a: float = 0.0
    r_e: float = 0.0
    grid: tuple = ()
    values: tuple = ()
    dissociation: float = np.inf
    _spline: Callable | None = field(default=None, compare=False, repr=False)

    @classmethod
    def morse(cls, d_e: float, a: float, r_e: float, reduced_mass: float) -> "DiatomCurve":
        if d_e <= 0 or a <= 0 or r_e <= 0 or reduced_mass <= 0:
            raise ValueError("Morse parameters and mass must be positive")
        return cls(reduced_mass=reduced_mass, kind="morse", d_e=d_e, a=a, r_e=r_e,
                   dissociation=d_e)

    @classmethod
    def from_constants(cls, omega_e: float, omega_e_xe: float, r_e: float,
                       reduced_mass: float) -> "DiatomCurve":
        """Morse curve reproducing the spectroscopic constants omega_e and omega_e x_e."""
        b = hbar2_2mu(reduced_mass)
        a = np.sqrt(omega_e_xe / b)
        d_e = omega_e**2 / (4 * omega_e_xe)
        return cls.morse(d_e, a, r_e, reduced_mass)

    @classmethod
    def tabulated(cls, grid, values, reduced_mass: float,
                  dissociation: float | None = None) -> "DiatomCurve":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or grid.shape != values.shape:
            raise ValueError("tabulated curve needs matching 1-D arrays with >= 3 points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("tabulated grid must be strictly increasing")
        if reduced_mass <= 0:
            raise ValueError("reduced mass must be positive")
        diss = values[-1] if dissociation is None else dissociation
        return cls(reduced_mass=reduced_mass, kind="tabulated", grid=tuple(grid),
                   values=tuple(values), dissociation=float(diss),
                   _spline=CubicSpline(grid, values))

    @classmethod
    def from_file(cls, path, reduced_mass: float, dissociation: float | None = None) -> "DiatomCurve":
        """Read a two-column (r, V) text file; lines starting with '#' are comments."""
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] < 2:
            raise ValueError(f"{path}: expected two columns (r, V)")
        return cls.tabulated(data[:, 0], data[:, 1], reduced_mass, dissociation)

    @property
    def omega_e(self) -> float:
        return 2 * self.a * np.sqrt(self.d_e * hbar2_2mu(self.reduced_mass))

    @property
    def omega_e_xe(self) -> float:
        return self.a**2 * hbar2_2mu(self.reduced_mass)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "morse":
            return self.d_e * (1.0 - np.exp(-self.a * (r - self.r_e))) ** 2
        return self._spline(r)


@dataclass(frozen=True, eq=False)
class RovibLevel:
    v: int
    j: int
    energy: float
    r: np.ndarray = field(repr=False)
    wavefunction: np.ndarray = field(repr=False)

    @property
    def label(self) -> tuple[int, int]:
        return (self.v, self.j)


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights on n uniform points (trapezoid-corrected end if n is even)."""
    w = np.ones(n)
    if n % 2 == 1:
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * h / 3.0
    # odd number of intervals: Simpson on the first n-3 intervals, 3/8 rule at the end
    w = np.zeros(n)
    w[: n - 3] = simpson_weights(n - 3, h)
    w[n - 4:] += np.array([3, 9, 9, 3]) * h / 8.0
    return w


def _numerov_out(q: np.ndarray, h: float) -> np.ndarray:
    f = 1.0 - h * h * q / 12.0
    n = q.size
    chi = np.zeros(n)
    chi[1] = 1e-10
    for i in range(1, n - 1):
        chi[i + 1] = ((12.0 - 10.0 * f[i]) * chi[i] - f[i - 1] * chi[i - 1]) / f[i + 1]
        if abs(chi[i + 1]) > 1e200:
            chi[: i + 2] *= 1e-200
    return chi


def _count_nodes(chi: np.ndarray) -> int:
    # the outer wall sample is included so the count is a true Sturm sequence
    s = np.sign(chi[1:])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _effective_q(curve: DiatomCurve, j: int, grid: GridSpec):
    r = grid.r
    b = hbar2_2mu(curve.reduced_mass)
    veff = curve(r).astype(float)
    if j:
        with np.errstate(divide="ignore"):
            veff = veff + b * j * (j + 1) / r**2
    return r, veff, b


def solve_level(curve: DiatomCurve, v: int, j: int, grid: GridSpec,
                rtol: float = 1e-14) -> RovibLevel:
    """Bound level (v, j) of *curve* on *grid*."""
    if v < 0 or j < 0:
        raise ValueError("v and j must be non-negative")
    r, veff, b = _effective_q(curve, j, grid)
    h = grid.step
    finite = np.isfinite(veff)
    e_lo = float(np.min(veff[finite]))
    e_hi = min(float(curve.dissociation), float(np.max(veff[finite])))
    if not np.isfinite(curve.dissociation):
        # no dissociation limit (e.g. a box): grow the ceiling until v is below it
        span = grid.r_max - grid.r_min
        e_hi = float(np.max(veff[finite])) + b * (np.pi * (v + 2) / span) ** 2

    def shoot(e):
        return _numerov_out(np.where(finite, (veff - e) / b, 1e30), h)

    def count(e):
        return _count_nodes(shoot(e))

    if not np.isfinite(curve.dissociation):
        while count(e_hi) <= v:
            e_hi = e_lo + 2.0 * (e_hi - e_lo)
    if count(e_hi) <= v:
        raise NoSuchLevelError(f"level v={v}, j={j} is not bound on this curve/grid")
    # bisection on the Sturm count until the bracket isolates eigenvalue v
    lo, hi = e_lo, e_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if count(mid) > v:
            hi = mid
        else:
            lo = mid
        if count(lo) == v and count(hi) == v + 1:
            break
    else:
        raise ConvergenceError(f"could not isolate level v={v}, j={j}")

    def endpoint(e):
        chi = shoot(e)
        return chi[-1] / np.max(np.abs(chi))

    energy = brentq(endpoint, lo, hi, xtol=1e-300, rtol=max(rtol, 4e-16), maxiter=500)
    chi = _match(np.where(finite, (veff - energy) / b, 1e30), veff, energy, h)
    chi /= np.sqrt(np.sum(simpson_weights(r.size, h) * chi * chi))
    # positive lobe at short range fixes the sign convention
    first = np.flatnonzero(np.abs(chi) > 1e-3 * np.max(np.abs(chi)))[0]
    if chi[first] < 0:
        chi = -chi
    nodes = _count_nodes(np.where(np.abs(chi) > 1e-10 * np.max(np.abs(chi)), chi, 0.0))
    if nodes != v:
        raise ConvergenceError(f"level v={v}, j={j}: wavefunction has {nodes} nodes")
    return RovibLevel(v, j, float(energy), r, chi)


def _match(q: np.ndarray, veff: np.ndarray, e: float, h: float) -> np.ndarray:
    n = q.size
    allowed = np.flatnonzero(veff < e)
    m = int(min(max(allowed[-1], 2), n - 3)) if allowed.size else n // 2
    out = _numerov_out(q[: m + 2], h)
    inn = _numerov_out(q[::-1][: n - m + 1], h)[::-1]
    chi = np.empty(n)
    chi[: m + 1] = out[: m + 1] / out[m]
    chi[m:] = inn[1:] / inn[1]
    return chi


def morse_levels(d_e: float, a: float, r_e: float, mass: float, v_max: int) -> list[float]:
    """Closed-form j=0 Morse energies (cm^-1 above the minimum) for bound v <= v_max."""
    b = hbar2_2mu(mass)
    omega = 2 * a * np.sqrt(d_e * b)
    wx = a * a * b
    out = []
    for v in range(v_max + 1):
        # bound while the vibrational spacing stays positive
        if omega - 2 * wx * (v + 0.5) <= 0:
            break
        out.append(omega * (v + 0.5) - wx * (v + 0.5) ** 2)
    return out


def radial_integral(bra: RovibLevel, ket: RovibLevel, weight: Callable | None = None) -> float:
    """Simpson quadrature of chi_bra * weight(r) * chi_ket on the shared grid."""
    if bra.r.shape != ket.r.shape or not np.array_equal(bra.r, ket.r):
        raise ValueError("levels live on different radial grids")
    r = bra.r
    w = simpson_weights(r.size, r[1] - r[0])
    f = bra.wavefunction * ket.wavefunction
    if weight is not None:
        f = f * np.broadcast_to(weight(r), r.shape)
    return float(np.sum(w * f))


# omega_e x_e is fitted so that the (1,0)+(0,2) vs (1,2)+(0,0) gap is 25.45 K
DIATOM_PRESETS = {
    "h2-like": dict(omega_e=4401.2, omega_e_xe=147.0, r_e=0.7414, reduced_mass=H_ATOM_MASS / 2),
}


def preset_curve(name: str) -> DiatomCurve:
    try:
        p = DIATOM_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown diatom preset {name!r}; known: {sorted(DIATOM_PRESETS)}") from None
    return DiatomCurve.from_constants(**p)


class LevelSet:
    """Cache of solved levels on one curve and grid."""

    def __init__(self, curve: DiatomCurve, grid: GridSpec):
        self.curve = curve
        self.grid = grid
        self._levels: dict[tuple[int, int], RovibLevel] = {}

    def __getitem__(self, vj: tuple[int, int]) -> RovibLevel:
        if vj not in self._levels:
            self._levels[vj] = solve_level(self.curve, vj[0], vj[1], self.grid)
        return self._levels[vj]

    def energy(self, v: int, j: int) -> float:
        return self[(v, j)].energy


def effective_b(levels: LevelSet, v: int) -> float:
    """Effective rotational constant from the j=0 and j=2 energies."""
    return (levels.energy(v, 2) - levels.energy(v, 0)) / 6.0


def resonance_gap(levels: LevelSet) -> float:
    """[E(1,0) + E(0,2)] - [E(1,2) + E(0,0)] in cm^-1."""
    return (levels.energy(1, 0) + levels.energy(0, 2)) - (levels.energy(1, 2) + levels.energy(0, 0))
