import csv
import io
from itertools import product

import pytest
from hypothesis import given, strategies as st

from diatomscat.basis import (CMS, Block, Symmetry, build_channels, channel_csv, enumerate_cms,
                              enumerate_pairs, exchange_phase, parse_cms, truncate_dv)
from diatomscat.diatom import GridSpec, LevelSet, preset_curve


def fake_levels(v_max=6, j_max=6):
    # irrational-ish spacings keep sums distinct
    return {(v, j): 4157.3 * v - 117.9 * v * v + 59.33 * j * (j + 1) - 2.81 * v * j * (j + 1)
            for v in range(v_max + 1) for j in range(j_max + 1)}


@pytest.fixture(scope="module")
def h2_energies():
    ls = LevelSet(preset_curve("h2-like"), GridSpec(0.2, 3.5, 3301))
    return {(v, j): ls.energy(v, j) for v in range(2) for j in range(3)}


def test_para_v1_j2_gives_ten_states(h2_energies):
    got = enumerate_cms(h2_energies, 1, 2, species="para")
    labels = {c.labels for c in got}
    # brute force: every unordered pair of (v, j) levels with even j
    lv = [(v, j) for v in range(2) for j in (0, 2)]
    brute = {max(a, b) + min(a, b) for a in lv for b in lv}
    assert labels == brute and len(got) == 10
    for want in [(1, 0, 0, 0), (1, 2, 0, 0), (1, 0, 0, 2)]:
        assert want in labels
    energies = [c.energy for c in got]
    assert energies == sorted(energies)
    assert got[0].labels == (0, 0, 0, 0)


def test_single_ground_state():
    got = enumerate_cms({(0, 0): 0.0}, 0, 0)
    assert [c.labels for c in got] == [(0, 0, 0, 0)]


@pytest.mark.parametrize("species", ["para", "ortho", "hetero"])
def test_well_ordering_emits_each_unordered_pair_once(species):
    e = fake_levels()
    got = enumerate_cms(e, 6, 6, species=species)
    js = {"para": range(0, 7, 2), "ortho": range(1, 7, 2), "hetero": range(7)}[species]
    lv = [(v, j) for v in range(7) for j in js]
    unordered = {frozenset([a, b]) if a != b else frozenset([a]) for a in lv for b in lv}
    seen = [frozenset([(c.v1, c.j1), (c.v2, c.j2)]) for c in got]
    assert len(seen) == len(set(seen)) == len(unordered)
    assert all(c.well_ordered for c in got)


def test_energy_cap_and_ordered_mode():
    e = fake_levels(2, 2)
    cap = 4500.0
    got = enumerate_cms(e, 2, 2, e_max=cap, species="hetero")
    assert got and all(c.energy <= cap for c in got)
    everything = enumerate_pairs(e, 2, 2, species="hetero", ordered=True)
    assert len(everything) == 9 * 9
    assert {c.labels for c in everything} >= {c.swapped.labels for c in everything}


def test_tie_break_is_lexicographic():
    e = {(0, 0): 0.0, (0, 2): 10.0, (1, 0): 10.0, (1, 2): 20.0}
    got = enumerate_cms(e, 1, 2)
    same = [c.labels for c in got if c.energy == 10.0]
    assert same == sorted(same)


def test_invalid_caps_and_species():
    with pytest.raises(ValueError):
        enumerate_cms({(0, 0): 0.0}, -1, 0)
    with pytest.raises(ValueError):
        enumerate_cms({(0, 0): 0.0}, 0, 0, species="meta")


def test_simple_channel_examples():
    c0200 = CMS(0, 2, 0, 0, 1.0)
    chans = build_channels([c0200], 0, +1)
    assert [(c.j12, c.l) for c in chans] == [(2, 2)]
    g = CMS(0, 0, 0, 0, 0.0)
    assert [(c.j12, c.l) for c in build_channels([g], 0, +1)] == [(0, 0)]
    assert build_channels([g], 0, -1) == []
    assert [(c.j12, c.l) for c in build_channels([g], 1, -1, Symmetry.DISTINGUISHABLE)] == [(0, 1)]
    assert build_channels([g], 1, +1, Symmetry.DISTINGUISHABLE) == []
    # two identical bosons in the same level: odd l is exchange-forbidden
    assert build_channels([g], 1, -1, Symmetry.SYMMETRIC) == []
    assert len(build_channels([g], 1, -1, Symmetry.ANTISYMMETRIC)) == 1


def _brute_count(cms_list, J, parity, symmetry):
    n = 0
    for c in cms_list:
        for j12, l in product(range(0, 30), range(0, 40)):
            if not (abs(c.j1 - c.j2) <= j12 <= c.j1 + c.j2 and abs(J - j12) <= l <= J + j12):
                continue
            if (-1) ** (c.j1 + c.j2 + l) != parity:
                continue
            n += 1
    return n


@pytest.mark.parametrize("J", range(0, 11))
def test_channel_count_matches_triple_loop_distinguishable(J):
    e = fake_levels(1, 3)
    cms = enumerate_pairs(e, 1, 3, species="hetero", ordered=True)
    for p in (1, -1):
        got = build_channels(cms, J, p, Symmetry.DISTINGUISHABLE)
        assert len(got) == _brute_count(cms, J, p, None)


@pytest.mark.parametrize("J", [0, 1, 4, 10])
def test_parity_partition_covers_all_pairs(J):
    c = CMS(1, 2, 0, 2, 0.0)
    both = build_channels([c], J, 1, Symmetry.DISTINGUISHABLE) + \
        build_channels([c], J, -1, Symmetry.DISTINGUISHABLE)
    pairs = sorted((ch.j12, ch.l) for ch in both)
    full = sorted((j12, l) for j12 in range(0, 5) for l in range(abs(J - j12), J + j12 + 1))
    assert pairs == full


def _symmetrized_count(j, J, parity, eps):
    """States of total J, parity and exchange eps for two identical rotors in level j.

    Counted in the uncoupled |m1 m2; l ml> basis: exchange maps m1 <-> m2 and
    multiplies by (-1)^l, so the exchange-even subspace at fixed M is known in
    closed form.  Subtracting the count at M = J + 1 leaves the multiplets.
    """
    def at(M):
        n = 0
        for l in range(0, J + 2 * j + 2):
            if (-1) ** l != parity:          # two identical j: parity is (-1)^l
                continue
            want_sym = (eps * (-1) ** l) == 1
            for ml in range(-l, l + 1):
                m = M - ml
                for m1 in range(-j, j + 1):
                    m2 = m - m1
                    if not -j <= m2 <= j or m1 > m2:
                        continue
                    if m1 == m2:
                        n += want_sym
                    else:
                        n += 1
        return n
    return at(J) - at(J + 1)


@pytest.mark.parametrize("j", [0, 1, 2, 3])
@pytest.mark.parametrize("J", range(0, 8))
def test_exchange_symmetrized_count(j, J):
    c = CMS(0, j, 0, j, 0.0)
    for parity in (1, -1):
        for sym, eps in ((Symmetry.SYMMETRIC, 1), (Symmetry.ANTISYMMETRIC, -1)):
            got = build_channels([c], J, parity, sym)
            assert len(got) == _symmetrized_count(j, J, parity, eps)
            assert all(exchange_phase(c, ch.j12, ch.l) == eps for ch in got)


def test_symmetric_plus_antisymmetric_is_full():
    c = CMS(1, 2, 1, 2, 0.0)
    for J in range(6):
        for p in (1, -1):
            s = build_channels([c], J, p, Symmetry.SYMMETRIC)
            a = build_channels([c], J, p, Symmetry.ANTISYMMETRIC)
            d = build_channels([c], J, p, Symmetry.DISTINGUISHABLE)
            assert len(s) + len(a) == len(d)


def test_identical_blocks_reject_unordered_states():
    with pytest.raises(ValueError):
        build_channels([CMS(0, 2, 1, 0, 0.0)], 0, 1, Symmetry.SYMMETRIC)
    with pytest.raises(ValueError):
        Block(-1, 1, Symmetry.SYMMETRIC)
    with pytest.raises(ValueError):
        Block(0, 0, Symmetry.SYMMETRIC)


def test_channel_ordering_by_energy_then_j12_then_l():
    e = fake_levels(1, 2)
    cms = enumerate_cms(e, 1, 2)
    chans = build_channels(cms, 3, 1)
    keys = [(round(c.cms.energy, 9), c.cms.labels, c.j12, c.l) for c in chans]
    assert keys == sorted(keys)


def test_truncate_dv_examples():
    states = [CMS(v1, 0, v2, 0, 0.0) for v1, v2 in [(2, 0), (3, 0), (4, 0), (4, 2), (5, 0)]]
    kept = {c.labels[::2] for c in truncate_dv(states, 1, (4, 0, 0, 0))}
    assert kept == {(3, 0), (4, 0), (5, 0)}
    # (4200) means v1=4, v2=0 in j-labels (4,2,0,0)
    s4200 = CMS(4, 2, 0, 0, 0.0)
    s2000 = CMS(2, 0, 0, 0, 0.0)
    s3000 = CMS(3, 0, 0, 0, 0.0)
    assert truncate_dv([s2000, s3000, s4200], 1, (4, 0, 0, 0)) == [s3000, s4200]
    assert truncate_dv(states, 5, (4, 0, 0, 0)) == states
    assert truncate_dv(states, None, (4, 0, 0, 0)) == states


def test_truncate_uses_best_pairing():
    ref = CMS(2, 0, 1, 0)
    assert truncate_dv([CMS(1, 0, 1, 0)], 0, ref) == []
    assert truncate_dv([CMS(2, 2, 1, 0)], 0, ref) == [CMS(2, 2, 1, 0)]
    assert truncate_dv([CMS(1, 0, 2, 0)], 0, ref, ordered=True) == []


@given(st.tuples(*[st.integers(0, 9)] * 4))
def test_parse_cms_round_trip(lab):
    c = CMS(*lab)
    assert parse_cms(c.name()) == lab
    assert parse_cms(c.name(distinguishable=True)) == lab
    assert parse_cms(",".join(map(str, lab))) == lab


def test_parse_cms_rejects_garbage():
    for bad in ("10x2", "100", "1,2,3", "-1,0,0,0"):
        with pytest.raises(ValueError):
            parse_cms(bad)


def test_channel_csv_round_trip():
    cms = enumerate_cms(fake_levels(1, 2), 1, 2)
    chans = build_channels(cms, 2, 1)
    rows = list(csv.DictReader(io.StringIO(channel_csv(chans))))
    assert len(rows) == len(chans)
    for r, c in zip(rows, chans):
        assert (int(r["j12"]), int(r["l"]), r["cms"]) == (c.j12, c.l, c.cms.name())
        assert float(r["threshold_K"]) == pytest.approx(c.cms.energy * 1.4387769, rel=1e-9)
