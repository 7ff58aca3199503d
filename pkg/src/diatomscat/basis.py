"""Combined molecular states and coupled channel lists.

A combined molecular state (CMS) is a pair of monomer levels (v1 j1, v2 j2).
For indistinguishable molecules only well-ordered pairs are kept
(v1 > v2, or v1 == v2 and j1 >= j2); in distinguishable mode both orderings
are separate states.  Channels add the coupled rotor angular momentum j12 and
the partial wave l inside a block of fixed total J, parity and exchange
symmetry.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .units import CM_TO_K

__all__ = [
    "CMS",
    "Channel",
    "Symmetry",
    "Block",
    "enumerate_cms",
    "enumerate_pairs",
    "build_channels",
    "truncate_dv",
    "channel_csv",
    "parse_cms",
]


class Symmetry(enum.Enum):
    SYMMETRIC = "symmetric"            # indistinguishable, epsilon = +1
    ANTISYMMETRIC = "antisymmetric"    # indistinguishable, epsilon = -1
    DISTINGUISHABLE = "distinguishable"

    @property
    def epsilon(self) -> int:
        return {"symmetric": 1, "antisymmetric": -1}.get(self.value, 0)

    @property
    def identical(self) -> bool:
        return self is not Symmetry.DISTINGUISHABLE


@dataclass(frozen=True, order=True)
class CMS:
    """Pair of rovibrational labels with its total internal energy (cm^-1)."""

    v1: int
    j1: int
    v2: int
    j2: int
    energy: float = 0.0

    @property
    def labels(self) -> tuple[int, int, int, int]:
        return (self.v1, self.j1, self.v2, self.j2)

    @property
    def well_ordered(self) -> bool:
        return self.v1 > self.v2 or (self.v1 == self.v2 and self.j1 >= self.j2)

    @property
    def homonuclear_pair(self) -> bool:
        """Both molecules in the same rovibrational level."""
        return self.v1 == self.v2 and self.j1 == self.j2

    @property
    def swapped(self) -> "CMS":
        return CMS(self.v2, self.j2, self.v1, self.j1, self.energy)

    @property
    def degeneracy(self) -> int:
        return (2 * self.j1 + 1) * (2 * self.j2 + 1)

    def name(self, distinguishable: bool = False) -> str:
        if distinguishable:
            return f"[{self.v1}{self.j1};{self.v2}{self.j2}]"
        return f"({self.v1}{self.j1}{self.v2}{self.j2})"

    def __str__(self) -> str:
        return self.name()


def parse_cms(text: str) -> tuple[int, int, int, int]:
    """Parse '(1002)', '1002', '[10;02]' or '1,0,0,2' into a label tuple."""
    t = text.strip().strip("()[]")
    if "," in t:
        parts = [int(x) for x in t.split(",")]
    elif ";" in t:
        a, b = t.split(";")
        parts = [int(a[0]), int(a[1:]), int(b[0]), int(b[1:])]
    else:
        if len(t) != 4 or not t.isdigit():
            raise ValueError(f"cannot parse state label {text!r}; use e.g. 1002 or 1,0,0,2")
        parts = [int(c) for c in t]
    if len(parts) != 4 or min(parts) < 0:
        raise ValueError(f"cannot parse state label {text!r}")
    return tuple(parts)


def _allowed_j(species: str, j_max: int) -> list[int]:
    if species == "para":
        return list(range(0, j_max + 1, 2))
    if species == "ortho":
        return list(range(1, j_max + 1, 2))
    if species == "hetero":
        return list(range(0, j_max + 1))
    raise ValueError(f"unknown species {species!r} (para, ortho or hetero)")


def _sort_key(c: CMS):
    return (round(c.energy, 9), c.v1, c.j1, c.v2, c.j2)


def enumerate_pairs(level_energy: Mapping[tuple[int, int], float], v_max: int, j_max: int,
                    e_max: float | None = None, species: str = "para",
                    ordered: bool = False) -> list[CMS]:
    """All pairs of monomer levels, sorted by increasing internal energy.

    ``level_energy`` maps (v, j) to the monomer energy.  With ``ordered=False``
    only well-ordered pairs are returned; otherwise every ordered pair.
    """
    if v_max < 0 or j_max < 0:
        raise ValueError("v_max and j_max must be non-negative")
    js = _allowed_j(species, j_max)
    levels = [(v, j) for v in range(v_max + 1) for j in js]
    out = []
    for a in levels:
        for b in levels:
            c = CMS(a[0], a[1], b[0], b[1], level_energy[a] + level_energy[b])
            if not ordered and not c.well_ordered:
                continue
            if e_max is not None and c.energy > e_max:
                continue
            out.append(c)
    return sorted(out, key=_sort_key)


def enumerate_cms(level_energy, v_max, j_max, e_max=None, species="para") -> list[CMS]:
    """Well-ordered combined molecular states sorted by internal energy."""
    return enumerate_pairs(level_energy, v_max, j_max, e_max, species, ordered=False)


@dataclass(frozen=True)
class Block:
    J: int
    parity: int
    symmetry: Symmetry

    def __post_init__(self):
        if self.J < 0:
            raise ValueError("J must be non-negative")
        if self.parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")

    def __str__(self) -> str:
        return f"J={self.J} p={'+' if self.parity > 0 else '-'} {self.symmetry.value}"


@dataclass(frozen=True)
class Channel:
    cms: CMS
    j12: int
    l: int
    block: Block

    @property
    def j1(self) -> int:
        return self.cms.j1

    @property
    def j2(self) -> int:
        return self.cms.j2

    @property
    def J(self) -> int:
        return self.block.J

    @property
    def threshold(self) -> float:
        return self.cms.energy


def exchange_phase(cms: CMS, j12: int, l: int) -> int:
    """Phase acquired by |(j1 j2) j12, l> when the two molecules are swapped."""
    return -1 if (cms.j1 + cms.j2 - j12 + l) % 2 else 1


def channel_allowed(cms: CMS, j12: int, l: int, block: Block) -> bool:
    if not abs(cms.j1 - cms.j2) <= j12 <= cms.j1 + cms.j2:
        return False
    if not abs(block.J - j12) <= l <= block.J + j12:
        return False
    if (-1) ** (cms.j1 + cms.j2 + l) != block.parity:
        return False
    if block.symmetry.identical and cms.homonuclear_pair:
        return exchange_phase(cms, j12, l) == block.symmetry.epsilon
    return True


def build_channels(cms_list: Sequence[CMS], J: int, parity: int,
                   symmetry: Symmetry = Symmetry.SYMMETRIC) -> list[Channel]:
    """Channels of block (J, parity, symmetry) ordered by CMS energy, j12, l."""
    block = Block(J, parity, Symmetry(symmetry))
    out = []
    for cms in sorted(cms_list, key=_sort_key):
        if block.symmetry.identical and not cms.well_ordered:
            raise ValueError(f"{cms} is not well ordered; indistinguishable blocks need CMS labels")
        for j12 in range(abs(cms.j1 - cms.j2), cms.j1 + cms.j2 + 1):
            for l in range(abs(J - j12), J + j12 + 1):
                if channel_allowed(cms, j12, l, block):
                    out.append(Channel(cms, j12, l, block))
    return out


def _dv_ok(cms: CMS, ref: CMS, dv_max: int, ordered: bool) -> bool:
    direct = max(abs(cms.v1 - ref.v1), abs(cms.v2 - ref.v2))
    if ordered:
        return direct <= dv_max
    crossed = max(abs(cms.v1 - ref.v2), abs(cms.v2 - ref.v1))
    return min(direct, crossed) <= dv_max


def truncate_dv(items: Iterable, dv_max: int | None, reference: CMS | tuple,
                ordered: bool = False) -> list:
    """Drop channels (or CMSs) whose vibrational change from *reference* exceeds dv_max.

    For well-ordered pairs the better of the two molecule pairings is used.
    """
    items = list(items)
    if dv_max is None:
        return items
    ref = reference if isinstance(reference, CMS) else CMS(*reference)
    keep = []
    for it in items:
        cms = it.cms if isinstance(it, Channel) else it
        if _dv_ok(cms, ref, dv_max, ordered):
            keep.append(it)
    return keep


def channel_csv(channels: Sequence[Channel], distinguishable: bool = False) -> str:
    """CSV table of a channel list, one row per channel, threshold in kelvin."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "J", "parity", "symmetry", "cms", "v1", "j1", "v2", "j2",
                "j12", "l", "threshold_K"])
    for i, ch in enumerate(channels):
        c = ch.cms
        w.writerow([i, ch.J, ch.block.parity, ch.block.symmetry.value, c.name(distinguishable),
                    c.v1, c.j1, c.v2, c.j2, ch.j12, ch.l, f"{c.energy * CM_TO_K:.10e}"])
    return buf.getvalue()
