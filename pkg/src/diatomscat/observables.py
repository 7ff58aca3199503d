"""Asymptotic matching, S matrices, cross sections and rate constants.

Sign convention: open-channel solutions behave as ``j_l - n_l K`` with the
Riccati functions ``j_l(x) = x j_l(x)``, ``n_l(x) = x y_l(x)``, so a single
channel has ``K = tan(delta)`` and ``S = (1 + iK)(1 - iK)^-1 = exp(2 i delta)``.
Closed channels are matched to the decaying modified Riccati function and
eliminated; only the open-open block of K is returned.

The interaction beyond the matching radius is added to K in first order,
dK = -int_R^inf Psi^T v Psi dR with Psi = u - w K built from flux-normalized
Riccati functions.  Only slow channels (k <= k_tail) are included: for fast
channels the dispersion tail averages out to well below 1e-9.

Identical-molecule cross sections carry the factor (1 + d_i)(1 + d_f), with
d = 1 when both molecules of a combined state share a rovibrational level.
With this convention detailed balance holds with plain rotational
degeneracies, and the distinguishable-molecule cross sections use factor 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import constants as _c
from scipy.special import kve, spherical_jn, spherical_yn

from .basis import CMS, Channel, Symmetry
from .units import CM_TO_K, K_TO_CM

__all__ = [
    "SMatrixBlock",
    "AccuracyError",
    "match_and_extract",
    "cross_sections",
    "CrossSectionTable",
    "rate_constant",
    "dump_smatrix",
    "riccati",
]


class AccuracyError(RuntimeError):
    """S matrix fails its unitarity check; refine the radial grid."""


class MatchingBreakdown(RuntimeError):
    pass


def riccati(l: np.ndarray, k: np.ndarray, R: float):
    """Riccati-Bessel j, n and their R-derivatives for open channels."""
    x = k * R
    jl = spherical_jn(l, x)
    yl = spherical_yn(l, x)
    djl = spherical_jn(l, x, derivative=True)
    dyl = spherical_yn(l, x, derivative=True)
    J = x * jl
    N = x * yl
    dJ = k * (jl + x * djl)
    dN = k * (yl + x * dyl)
    return J, N, dJ, dN


def decaying_logderiv(l: np.ndarray, kappa: np.ndarray, R: float) -> np.ndarray:
    """d/dR ln[x k_l(x)] for the modified spherical Bessel k_l, x = kappa R."""
    x = kappa * R
    nu = l + 0.5
    ratio = kve(nu - 1.0, x) / kve(nu, x)
    return kappa * (0.5 / x - ratio - nu / x)


@dataclass
class SMatrixBlock:
    """S matrix over the open channels of one (E, J, parity, symmetry) block."""

    energy: float                 # total energy, cm^-1 relative to the run's zero
    channels: list[Channel]       # open channels only
    k: np.ndarray                 # wavenumbers, 1/angstrom
    S: np.ndarray
    K: np.ndarray

    @property
    def unitarity_defect(self) -> float:
        if self.S.size == 0:
            return 0.0
        return float(np.max(np.abs(self.S.conj().T @ self.S - np.eye(len(self.S)))))

    @property
    def symmetry_defect(self) -> float:
        if self.S.size == 0:
            return 0.0
        return float(np.max(np.abs(self.S - self.S.T)))

    @property
    def block(self):
        return self.channels[0].block if self.channels else None


def _panels(r0: float, r1: float, width: float, order: int):
    edges = [r0]
    while edges[-1] < r1:
        edges.append(edges[-1] + min(0.05 * edges[-1], width))
    edges = np.array(edges)
    x, wq = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * wq[None, :]).ravel()


def _tail_piece(K, k, ls, block, open_index, rows, R, wt, chunk=4096):
    """-int Psi^T v Psi over quadrature (R, wt), restricted to channel *rows*."""
    dK = np.zeros_like(K)
    sub = open_index[rows]
    for s0 in range(0, R.size, chunk):
        r = R[s0:s0 + chunk]
        v = block.interaction(r)[:, sub[:, None], sub[None, :]] / block.hb2m
        psi = np.empty((r.size, rows.size, K.shape[1]))
        for a, ch in enumerate(rows):
            x = k[ch] * r
            J = x * spherical_jn(ls[ch], x)
            N = x * spherical_yn(ls[ch], x)
            psi[:, a, :] = -(N / np.sqrt(k[ch]))[:, None] * K[ch][None, :]
            psi[:, a, ch] += J / np.sqrt(k[ch])
        vpsi = np.matmul(v, psi)
        wpsi = (psi * wt[s0:s0 + chunk, None, None]).reshape(-1, K.shape[1])
        dK -= wpsi.T @ vpsi.reshape(-1, K.shape[1])
    return dK


def long_range_correction(K: np.ndarray, k: np.ndarray, ls: np.ndarray, block,
                          open_index: np.ndarray, R0: float, k_tail: float = 0.1,
                          near: float = 4.0, far: float = 40.0, order: int = 10) -> np.ndarray:
    """First-order correction to the flux-normalized K for the interaction beyond R0.

    All open channels are integrated over [R0, near*R0]; only slow channels
    (k <= k_tail) continue to far*R0, beyond which every contribution has
    dropped below ~1e-9 relative.
    """
    rows = np.arange(k.size)
    R, wt = _panels(R0, near * R0, 3.0 / k.max(), order)
    dK = _tail_piece(K, k, ls, block, open_index, rows, R, wt)
    slow = np.flatnonzero(k <= k_tail)
    if slow.size:
        R, wt = _panels(near * R0, far * R0, 3.0 / k[slow].max(), order)
        dK += _tail_piece(K, k, ls, block, open_index, slow, R, wt)
    return K + dK


def match_and_extract(Y: np.ndarray, block, energy: float, R: float,
                      unitarity_tol: float = 1e-6, tail: bool = True) -> SMatrixBlock:
    """K and S from the log-derivative matrix Y (n, n) at radius R.

    With *tail* the interaction beyond R is included in first order (see
    :func:`long_range_correction`).
    """
    Y = np.asarray(Y, float)
    hb = block.hb2m
    k2 = (energy - block.thresholds) / hb
    ls = block.ls
    open_ = k2 > 0
    no = int(np.count_nonzero(open_))
    if no == 0:
        return SMatrixBlock(energy, [], np.zeros(0), np.zeros((0, 0), complex), np.zeros((0, 0)))
    n = block.size
    A = np.empty((n, n))
    B = np.empty((n, no))
    oi = np.flatnonzero(open_)
    ci = np.flatnonzero(~open_)
    k = np.sqrt(k2[oi])
    J, N, dJ, dN = riccati(ls[oi], k, R)
    scale = np.hypot(J, N)
    # open columns scaled by 1/scale; closed columns by 1/decaying function
    A[:, oi] = Y[:, oi] * (N / scale)[None, :]
    A[oi, oi] -= dN / scale
    B[:, :] = Y[:, oi] * (J / scale)[None, :]
    B[oi, np.arange(no)] -= dJ / scale
    if ci.size:
        kappa = np.sqrt(-k2[ci])
        A[:, ci] = Y[:, ci]
        A[ci, ci] -= decaying_logderiv(ls[ci], kappa, R)
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise MatchingBreakdown(f"matching matrix singular at E={energy} cm^-1") from exc
    # undo column scaling and convert to flux-normalized K
    Kp = X[oi, :] * scale[None, :] / scale[:, None]
    K = Kp * np.sqrt(k)[:, None] / np.sqrt(k)[None, :]
    if tail and hasattr(block, "interaction"):
        K = long_range_correction(K, k, ls[oi], block, oi, R)
    I = np.eye(no)
    try:
        S = np.linalg.solve((I - 1j * K).T, (I + 1j * K).T).T
    except np.linalg.LinAlgError as exc:
        raise MatchingBreakdown("I - iK is singular") from exc
    out = SMatrixBlock(energy, [block.channels[i] for i in oi], k, S, K)
    if out.unitarity_defect > unitarity_tol:
        raise AccuracyError(
            f"S matrix unitarity defect {out.unitarity_defect:.2e} at E={energy:.6g} cm^-1 "
            f"({out.block}); refine the radial grid")
    return out


def statistical_factor(initial: CMS, final: CMS, symmetry: Symmetry) -> float:
    if not symmetry.identical:
        return 1.0
    return (1.0 + initial.homonuclear_pair) * (1.0 + final.homonuclear_pair)


def _key(c: CMS):
    return c.labels


@dataclass
class CrossSectionTable:
    """State-to-state cross sections (angstrom^2) out of one initial state at one energy."""

    collision_energy: float                 # K, relative to the initial state
    initial: CMS
    sigma: dict                             # final labels -> cross section
    finals: dict                            # final labels -> CMS
    k_initial: float
    partial: dict = field(default_factory=dict)   # J -> {final labels: contribution}
    distinguishable: bool = False

    def __getitem__(self, final) -> float:
        key = final.labels if isinstance(final, CMS) else tuple(final)
        return self.sigma.get(key, 0.0)

    @property
    def elastic(self) -> float:
        return self[self.initial]

    @property
    def inelastic(self) -> dict:
        return {k: v for k, v in self.sigma.items() if k != self.initial.labels}

    @property
    def total_inelastic(self) -> float:
        return float(sum(self.inelastic.values()))

    def ordered_finals(self) -> list[CMS]:
        return sorted(self.finals.values(), key=lambda c: (round(c.energy, 9), c.labels))

    def last_j_fraction(self) -> dict:
        """Relative contribution of the highest J to every nonzero cross section."""
        if not self.partial:
            return {}
        jmax = max(self.partial)
        out = {}
        for key, tot in self.sigma.items():
            part = self.partial[jmax].get(key, 0.0)
            out[key] = part / tot if tot > 0 else 0.0
        return out


def cross_sections(s_blocks: Iterable[SMatrixBlock], initial: CMS, collision_energy: float,
                   symmetry: Symmetry) -> CrossSectionTable:
    """Sum |delta - S|^2 over J, parity and channel labels into state-to-state sigmas."""
    sigma: dict = {}
    finals: dict = {}
    partial: dict = {}
    k_i = None
    g_i = initial.degeneracy
    for sb in s_blocks:
        if not sb.channels:
            continue
        J = sb.block.J
        ii = [a for a, ch in enumerate(sb.channels) if ch.cms.labels == initial.labels]
        if not ii:
            continue
        if k_i is None:
            k_i = float(sb.k[ii[0]])
        T = np.eye(len(sb.channels))[:, ii] - sb.S[:, ii]
        prob = np.sum(np.abs(T) ** 2, axis=1)
        pj = partial.setdefault(J, {})
        for b, ch in enumerate(sb.channels):
            key = ch.cms.labels
            finals.setdefault(key, ch.cms)
            w = statistical_factor(initial, ch.cms, symmetry)
            val = np.pi * w * (2 * J + 1) * prob[b] / (k_i**2 * g_i)
            sigma[key] = sigma.get(key, 0.0) + val
            pj[key] = pj.get(key, 0.0) + val
    if k_i is None:
        raise ValueError(f"initial state {initial} is closed or absent at this energy")
    return CrossSectionTable(collision_energy, initial, sigma, finals, k_i, partial,
                             not symmetry.identical)


def rate_constant(sigma: float, energy_k: float, reduced_mass: float) -> float:
    """sigma * v_rel in cm^3 s^-1 (sigma in angstrom^2, E in K, mass in u)."""
    if energy_k <= 0:
        raise ValueError("collision energy must be positive")
    v = np.sqrt(2.0 * energy_k * _c.k / (reduced_mass * _c.atomic_mass))  # m/s
    return float(sigma * 1e-16 * v * 100.0)


def dump_smatrix(sb: SMatrixBlock, collision_energy_k: float | None = None) -> str:
    """Text dump: commented header, channel table, then row-major (re, im) pairs."""
    buf = io.StringIO()
    blk = sb.block
    buf.write("# S-matrix dump\n")
    buf.write(f"# E_total_K = {sb.energy * CM_TO_K:.12e}\n")
    if collision_energy_k is not None:
        buf.write(f"# E_collision_K = {collision_energy_k:.12e}\n")
    if blk is not None:
        buf.write(f"# J = {blk.J}\n# parity = {blk.parity:+d}\n# symmetry = {blk.symmetry.value}\n")
    buf.write(f"# n_open = {len(sb.channels)}\n")
    buf.write("# channel index v1 j1 v2 j2 j12 l k_invA\n")
    for i, ch in enumerate(sb.channels):
        c = ch.cms
        buf.write(f"# channel {i} {c.v1} {c.j1} {c.v2} {c.j2} {ch.j12} {ch.l} {sb.k[i]:.12e}\n")
    for row in sb.S:
        buf.write(" ".join(f"{z.real:.15e} {z.imag:.15e}" for z in row) + "\n")
    return buf.getvalue()


def read_smatrix(text: str) -> tuple[dict, np.ndarray]:
    """Parse :func:`dump_smatrix` output back into (header dict, S)."""
    header = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = (s.strip() for s in body.split("=", 1))
                header[key] = val
            continue
        vals = np.array(line.split(), float)
        rows.append(vals[0::2] + 1j * vals[1::2])
    return header, np.array(rows, complex)
