"""Angular momentum algebra for diatom-diatom coupling.

All routines accept integer or half-integer quantum numbers.  Internally every
value is carried as twice its value (an ``int``) so that half-integers are
exact; selection-rule violations return 0.0 rather than raising.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Protocol

import numpy as np

__all__ = [
    "twice",
    "wigner3j",
    "wigner6j",
    "wigner9j",
    "coupling_coefficient",
    "CoupledLabels",
]

_LOGFACT = np.zeros(1)


def _logfact_table(n: int) -> np.ndarray:
    global _LOGFACT
    if n >= _LOGFACT.size:
        size = max(n + 1, 2 * _LOGFACT.size, 128)
        _LOGFACT = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, size)))))
    return _LOGFACT


def twice(x) -> int:
    """Return ``2*x`` as an int, raising ``ValueError`` if *x* is not a half-integer."""
    if isinstance(x, (int, np.integer)):
        return 2 * int(x)
    tx = 2 * Fraction(x).limit_denominator(4) if not isinstance(x, Fraction) else 2 * x
    if tx.denominator != 1 or abs(float(tx) - 2 * float(x)) > 1e-9:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(tx)


def _triangle(ta: int, tb: int, tc: int) -> bool:
    return (
        ta >= 0 and tb >= 0 and tc >= 0
        and (ta + tb + tc) % 2 == 0
        and abs(ta - tb) <= tc <= ta + tb
    )


def _log_delta(ta: int, tb: int, tc: int, lf: np.ndarray) -> float:
    # log of the triangle coefficient, arguments as twice-values
    return 0.5 * (
        lf[(ta + tb - tc) // 2] + lf[(ta - tb + tc) // 2] + lf[(-ta + tb + tc) // 2]
        - lf[(ta + tb + tc) // 2 + 1]
    )


@lru_cache(maxsize=200_000)
def _w3j(t1: int, t2: int, t3: int, tm1: int, tm2: int, tm3: int) -> float:
    if tm1 + tm2 + tm3 != 0 or not _triangle(t1, t2, t3):
        return 0.0
    for tj, tm in ((t1, tm1), (t2, tm2), (t3, tm3)):
        if abs(tm) > tj or (tj + tm) % 2:
            return 0.0
    # integer-valued combinations used by the Racah sum
    a = (t1 + t2 - t3) // 2
    b = (t1 - tm1) // 2
    c = (t2 + tm2) // 2
    d = (t3 - t2 + tm1) // 2
    e = (t3 - t1 - tm2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    if kmin > kmax:
        return 0.0
    lf = _logfact_table((t1 + t2 + t3) // 2 + 1)
    log_pre = _log_delta(t1, t2, t3, lf) + 0.5 * (
        lf[(t1 + tm1) // 2] + lf[(t1 - tm1) // 2]
        + lf[(t2 + tm2) // 2] + lf[(t2 - tm2) // 2]
        + lf[(t3 + tm3) // 2] + lf[(t3 - tm3) // 2]
    )
    total = 0.0
    for k in range(kmin, kmax + 1):
        log_term = log_pre - (
            lf[k] + lf[d + k] + lf[e + k] + lf[a - k] + lf[b - k] + lf[c - k]
        )
        total += (-1.0) ** k * math.exp(log_term)
    phase = (t1 - t2 - tm3) // 2
    return -total if phase % 2 else total


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3)."""
    return _w3j(twice(j1), twice(j2), twice(j3), twice(m1), twice(m2), twice(m3))


@lru_cache(maxsize=200_000)
def _w6j(t1: int, t2: int, t3: int, t4: int, t5: int, t6: int) -> float:
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    if not all(_triangle(*tr) for tr in triads):
        return 0.0
    a = [sum(tr) // 2 for tr in triads]
    b = [(t1 + t2 + t4 + t5) // 2, (t2 + t3 + t5 + t6) // 2, (t3 + t1 + t6 + t4) // 2]
    tmin, tmax = max(a), min(b)
    if tmin > tmax:
        return 0.0
    lf = _logfact_table(tmax + 1)
    log_pre = sum(_log_delta(*tr, lf) for tr in triads)
    total = 0.0
    for t in range(tmin, tmax + 1):
        log_term = log_pre + lf[t + 1] - sum(lf[t - ai] for ai in a) - sum(lf[bi - t] for bi in b)
        total += (-1.0) ** t * math.exp(log_term)
    return total


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}."""
    return _w6j(twice(j1), twice(j2), twice(j3), twice(j4), twice(j5), twice(j6))


@lru_cache(maxsize=100_000)
def _w9j(t1, t2, t3, t4, t5, t6, t7, t8, t9) -> float:
    rows = ((t1, t2, t3), (t4, t5, t6), (t7, t8, t9))
    cols = ((t1, t4, t7), (t2, t5, t8), (t3, t6, t9))
    if not all(_triangle(*tr) for tr in rows + cols):
        return 0.0
    # sum over intermediate x (twice-valued, step 2)
    lo = max(abs(t1 - t9), abs(t4 - t8), abs(t2 - t6))
    hi = min(t1 + t9, t4 + t8, t2 + t6)
    total = 0.0
    for tx in range(lo, hi + 1, 2):
        total += (
            (-1.0) ** tx * (tx + 1)
            * _w6j(t1, t4, t7, t8, t9, tx)
            * _w6j(t2, t5, t8, t4, tx, t6)
            * _w6j(t3, t6, t9, tx, t1, t2)
        )
    return total


def wigner9j(j1, j2, j3, j4, j5, j6, j7, j8, j9) -> float:
    """Wigner 9j symbol {j1 j2 j3; j4 j5 j6; j7 j8 j9} as a sum over 6j products."""
    return _w9j(*(twice(x) for x in (j1, j2, j3, j4, j5, j6, j7, j8, j9)))


class CoupledLabels(Protocol):
    """Anything carrying the coupled-basis labels |(j1 j2) j12, l; J>."""

    j1: int
    j2: int
    j12: int
    l: int
    J: int


@lru_cache(maxsize=500_000)
def _coupling(bra: tuple, ket: tuple, lam: tuple) -> float:
    j1, j2, j12, l, J = bra
    k1, k2, k12, kl, _ = ket
    l1, l2, lt = lam
    # parity-type 3j factors vanish first in almost all zero cases
    c1 = wigner3j(j1, l1, k1, 0, 0, 0)
    if c1 == 0.0:
        return 0.0
    c2 = wigner3j(j2, l2, k2, 0, 0, 0)
    if c2 == 0.0:
        return 0.0
    c3 = wigner3j(l, lt, kl, 0, 0, 0)
    if c3 == 0.0:
        return 0.0
    six = wigner6j(l, kl, lt, k12, j12, J)
    if six == 0.0:
        return 0.0
    nine = wigner9j(j1, k1, l1, j2, k2, l2, j12, k12, lt)
    if nine == 0.0:
        return 0.0
    norm = (2 * lt + 1) * math.sqrt(
        (2 * l1 + 1) * (2 * l2 + 1)
        * (2 * j1 + 1) * (2 * k1 + 1) * (2 * j2 + 1) * (2 * k2 + 1)
        * (2 * j12 + 1) * (2 * k12 + 1) * (2 * l + 1) * (2 * kl + 1)
    )
    phase = -1.0 if (k1 + k2 + k12 + J + lt) % 2 else 1.0
    return phase * norm * c1 * c2 * c3 * six * nine


def coupling_coefficient(bra: CoupledLabels, ket: CoupledLabels, lambda_triple) -> float:
    """Angular weight of the bispherical term (l1, l2, l) between two channels.

    The angular function of the term is normalized so that the isotropic
    term (0, 0, 0) is identically one; its matrix element is then the unit
    matrix.  Both channels must lie in the same total-J block.
    """
    if bra.J != ket.J:
        raise ValueError(f"channels belong to different J blocks ({bra.J} != {ket.J})")
    b = (bra.j1, bra.j2, bra.j12, bra.l, bra.J)
    k = (ket.j1, ket.j2, ket.j12, ket.l, ket.J)
    lam = tuple(int(x) for x in lambda_triple)
    # canonical argument order makes bra<->ket symmetry exact
    if k < b:
        b, k = k, b
    return _coupling(b, k, lam)
