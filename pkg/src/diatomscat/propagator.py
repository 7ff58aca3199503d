"""Log-derivative propagation of the coupled radial equations.

The equations psi'' = [W(R) - E] / (hbar^2/2mu) psi are propagated sector by
sector as the log-derivative matrix Y = psi' psi^-1.  Each sector [a, b] of
width 2h is split at its midpoint c.  Within a half sector the solution of a
diagonal reference problem is used exactly (invariant imbedding), and the
residual coupling U = W - W_ref enters through Simpson-weighted kicks at a, c
and b, the midpoint one carrying the Numerov-type correction.

* ``johnson``: W_ref = 0 (free reference); this is Johnson's method.
* ``manolopoulos``: W_ref = diag W(c), exact for a constant diagonal
  potential and therefore much more tolerant of wide sectors.

All energies of a batch share the radial grid, so the matrix algebra is
batched over the energy axis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

SCHEMES = ("johnson", "manolopoulos")


class NumericalBreakdown(RuntimeError):
    """A sector solve became singular and could not be recovered."""


@dataclass(frozen=True)
class RadialGrid:
    """Sector layout between r_min and r_max (angstrom).

    ``step`` is the sector width inside ``r_grow``.  Beyond it sectors may
    widen to ``growth * R``, capped by ``step_max`` and by
    ``wavelength_fraction`` of the shortest asymptotic de Broglie wavelength
    of the batch, so couplings between channels of very different wavenumber
    stay resolved.
    """

    r_min: float
    r_max: float
    step: float
    scheme: str = "manolopoulos"
    growth: float = 0.0
    r_grow: float = 10.0
    step_max: float = 1.0
    wavelength_fraction: float = 0.03

    def __post_init__(self):
        if not self.r_max > self.r_min:
            raise ValueError("radial grid needs r_min < r_max")
        if not self.step > 0:
            raise ValueError("radial grid step must be positive")
        if self.growth < 0 or self.step_max <= 0 or self.wavelength_fraction <= 0:
            raise ValueError("growth must be >= 0; step_max and wavelength_fraction > 0")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown propagation scheme {self.scheme!r}; use {SCHEMES}")

    def boundaries(self, k_max: float = 0.0) -> np.ndarray:
        """Sector edges for a batch whose fastest asymptotic wavenumber is k_max."""
        cap = self.step_max
        if k_max > 0:
            cap = min(cap, self.wavelength_fraction * 2 * np.pi / k_max)
        cap = max(cap, self.step)
        pts = [self.r_min]
        r = self.r_min
        while r < self.r_max - 1e-12:
            w = self.step
            if self.growth and r > self.r_grow:
                w = min(max(self.step, self.growth * r), cap)
            r = min(r + w, self.r_max)
            # avoid a sliver at the end
            if self.r_max - r < 0.25 * w:
                r = self.r_max
            pts.append(r)
        return np.array(pts)

    def halved(self) -> "RadialGrid":
        """Every sector width halved (for step-convergence checks)."""
        return self.with_(step=0.5 * self.step, growth=0.5 * self.growth,
                          step_max=0.5 * self.step_max,
                          wavelength_fraction=0.5 * self.wavelength_fraction)

    def with_(self, **kw) -> "RadialGrid":
        d = dict(self.__dict__)
        d.update(kw)
        return RadialGrid(**d)


@dataclass
class LogDerivState:
    """Y (n_energy, n, n) at radius R, in inverse angstrom."""

    Y: np.ndarray
    R: float
    energies: np.ndarray
    symmetry_defect: float = 0.0

    def __getitem__(self, i) -> "LogDerivState":
        return LogDerivState(self.Y[i:i + 1], self.R, self.energies[i:i + 1], self.symmetry_defect)


def reference_propagators(lam: np.ndarray, h: float):
    """Diagonal half-sector propagators (y1 = y4, y2 = y3) for psi'' = lam psi.

    Returns arrays of the shape of *lam*.
    """
    lam = np.asarray(lam, float)
    y1 = np.empty_like(lam)
    y2 = np.empty_like(lam)
    small = np.abs(lam) * h * h < 1e-6
    # series around lam = 0
    ls = lam[small]
    y1[small] = 1.0 / h + ls * h / 3.0 - ls * ls * h**3 / 45.0
    y2[small] = 1.0 / h - ls * h / 6.0 + 7.0 * ls * ls * h**3 / 360.0
    pos = (lam > 0) & ~small
    kap = np.sqrt(lam[pos])
    x = kap * h
    e = np.exp(-2.0 * x)
    y1[pos] = kap * (1.0 + e) / (1.0 - e)
    y2[pos] = kap * 2.0 * np.exp(-x) / (1.0 - e)
    neg = (lam < 0) & ~small
    p = np.sqrt(-lam[neg])
    s = np.sin(p * h)
    y1[neg] = p * np.cos(p * h) / s
    y2[neg] = p / s
    return y1, y2


def _sym_inv(A: np.ndarray) -> np.ndarray:
    # LU inverse of a symmetric matrix, symmetrized: keeps Y exactly symmetric
    out = np.linalg.inv(A)
    out += np.swapaxes(out, -1, -2)
    out *= 0.5
    return out


def _half_step(Y: np.ndarray, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    idx = np.arange(Y.shape[-1])
    A = Y.copy()
    A[:, idx, idx] += y1
    out = _sym_inv(A)
    out *= y2[:, :, None]
    out *= -y2[:, None, :]
    out[:, idx, idx] += y1
    return out


def _sector(Y, Wa, Wc, Wb, shift, h, scheme):
    """Advance Y across one sector.

    W* are reduced (n, n) matrices W/(hbar^2/2mu) without the energy, which
    enters through *shift* = E/(hbar^2/2mu) of shape (n_e,).
    """
    n = Y.shape[-1]
    idx = np.arange(n)
    if scheme == "manolopoulos":
        # the energy cancels in U = W - W_ref, so the kicks are shared by all energies
        ref = np.diag(Wc).copy()
        lam = ref[None, :] - shift[:, None]
        Ua, Uc, Ub = Wa.copy(), Wc.copy(), Wb.copy()
        for U in (Ua, Uc, Ub):
            U[idx, idx] -= ref
        M = -(h * h / 6.0) * Uc
        M[idx, idx] += 1.0
        Q = _sym_inv(M)
        Q[idx, idx] -= 1.0
    else:
        lam = np.zeros((shift.size, n))
        Ua, Uc, Ub = (np.repeat(W[None], shift.size, axis=0) for W in (Wa, Wc, Wb))
        for U in (Ua, Uc, Ub):
            U[:, idx, idx] -= shift[:, None]
        M = -(h * h / 6.0) * Uc
        M[:, idx, idx] += 1.0
        Q = _sym_inv(M)
        Q[:, idx, idx] -= 1.0
    y1, y2 = reference_propagators(lam, h)
    if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))) or np.max(np.abs(y2)) > 1e12 / h:
        raise np.linalg.LinAlgError("reference propagator singular")
    Y = Y + (h / 3.0) * Ua
    Y = _half_step(Y, y1, y2)
    Y += (8.0 / h) * Q
    Y = _half_step(Y, y1, y2)
    Y += (h / 3.0) * Ub
    if not np.all(np.isfinite(Y)):
        raise np.linalg.LinAlgError("non-finite log-derivative")
    return Y


def propagate(block, energies, grid: RadialGrid, y0=1e10,
              chunk: int = 256, sample_every: int = 0) -> LogDerivState:
    """Propagate Y from grid.r_min to grid.r_max for each total energy (cm^-1).

    *block* must provide ``w(R_array) -> (m, n, n)`` in cm^-1, ``size``,
    ``thresholds`` and ``hb2m``.  Energies are relative to the same zero as
    the block thresholds.  *y0* is either the wall value placed on the
    diagonal or a starting Y of shape (n, n) or (n_energy, n, n), which
    continues an earlier propagation.
    """
    energies = np.atleast_1d(np.asarray(energies, float))
    n = block.size
    ne = energies.size
    hb = block.hb2m
    idx = np.arange(n)
    if np.ndim(y0) == 0:
        Y = np.zeros((ne, n, n))
        Y[:, idx, idx] = y0
    else:
        Y = np.array(np.broadcast_to(np.asarray(y0, float), (ne, n, n)))
    if n == 0 or ne == 0:
        return LogDerivState(Y, grid.r_max, energies)
    k_max = float(np.sqrt(max(energies.max() - np.min(block.thresholds), 0.0) / hb))
    edges = grid.boundaries(k_max)
    shift = energies / hb
    max_defect = 0.0
    i = 0
    nsec = edges.size - 1
    while i < nsec:
        j = min(i + chunk, nsec)
        a = edges[i:j]
        b = edges[i + 1:j + 1]
        c = 0.5 * (a + b)
        m = j - i
        Wall = block.w(np.concatenate([a, c, b])) / hb
        for s in range(m):
            h = 0.5 * (b[s] - a[s])
            try:
                Y = _sector(Y, Wall[s], Wall[s + m], Wall[s + 2 * m], shift, h, grid.scheme)
            except np.linalg.LinAlgError:
                Y = _retry_sector(block, Y, a[s], b[s], shift, grid.scheme)
            if sample_every and (i + s) % sample_every == 0:
                scale = max(np.max(np.abs(Y)), 1e-300)
                max_defect = max(max_defect, float(np.max(np.abs(Y - np.swapaxes(Y, 1, 2)))) / scale)
        i = j
    scale = max(np.max(np.abs(Y)), 1e-300)
    max_defect = max(max_defect, float(np.max(np.abs(Y - np.swapaxes(Y, 1, 2)))) / scale)
    return LogDerivState(Y, float(edges[-1]), energies, max_defect)


def _retry_sector(block, Y, a, b, shift, scheme):
    """Re-split an ill-conditioned sector at a perturbed point and try again."""
    hb = block.hb2m
    for frac in (0.45, 0.55, 0.4, 0.6):
        cut = a + frac * (b - a)
        try:
            Yt = Y
            for lo, hi in ((a, cut), (cut, b)):
                W = block.w(np.array([lo, 0.5 * (lo + hi), hi])) / hb
                Yt = _sector(Yt, W[0], W[1], W[2], shift, 0.5 * (hi - lo), scheme)
            return Yt
        except np.linalg.LinAlgError:
            continue
    raise NumericalBreakdown(f"singular sector solve between R={a:.6f} and R={b:.6f} angstrom")
