import numpy as np
import pytest

from diatomscat.basis import Symmetry
from diatomscat.driver import (CSV_COLUMNS, RunConfig, _Setup, _solve_block, distinguishable_decomposition,
                               exchange_operator, family, final_state_distribution, load_config, pathway_finals,
                               run_scan, write_scan_csv)
from diatomscat.observables import cross_sections
from diatomscat.potential import ConfigurationError

# one vibrational level keeps these runs to a few seconds
SMALL = RunConfig(energies=(1.0, 10.0), initial=((0, 2, 0, 0),), v_max=0, J_max=2)


@pytest.fixture(scope="module")
def small():
    return run_scan(SMALL, keep_smatrix=True)


@pytest.mark.parametrize("bad", [
    dict(energies=()), dict(energies=(0.0,)), dict(energies=(-1.0,)), dict(initial=()),
    dict(v_max=-1), dict(J_max=-1), dict(J_limit=1), dict(pw_tol=0.0), dict(threads=0),
    dict(species="meta"), dict(step=0.0), dict(r_max=1.0), dict(scheme="airy"), dict(e_max=-1.0),
])
def test_invalid_config_rejected(bad):
    with pytest.raises(ConfigurationError):
        SMALL.replace(**bad)


def test_initial_state_outside_basis():
    with pytest.raises(ConfigurationError, match="not in the basis"):
        run_scan(SMALL.replace(initial=((1, 0, 0, 0),)))
    with pytest.raises(ConfigurationError, match="not in the basis"):
        run_scan(SMALL.replace(initial=((0, 1, 0, 1),)))


INI = """
[diatom]
preset = h2-like
[pes]
preset = h2h2-model-calibrated
b = 0
[basis]
species = para
v_max = 0
j_max = 2
[grid]
step = 0.02
[energies]
log_min = -6
log_max = -4
per_decade = 1
[run]
J_max = 3
J_limit = 5
symmetry = symmetric
initial = 0200, 0000
threads = 2
"""


def test_load_config_text():
    cfg = load_config(INI, is_text=True)
    assert cfg.energies == pytest.approx((1e-6, 1e-5, 1e-4))
    assert cfg.initial == ((0, 2, 0, 0), (0, 0, 0, 0))
    assert (cfg.v_max, cfg.j_max, cfg.J_max, cfg.J_limit, cfg.threads) == (0, 2, 3, 5, 2)
    assert cfg.pes_b == 0.0 and cfg.step == 0.02 and cfg.symmetry is Symmetry.SYMMETRIC
    # output location and threads do not change the physics digest
    assert cfg.digest == cfg.replace(threads=1, output_dir="elsewhere").digest
    assert cfg.digest != cfg.replace(step=0.01).digest


@pytest.mark.parametrize("text,msg", [
    ("[run]\ninitial = 0000\n", "energies"),
    ("[energies]\nvalues = 1\n", "initial"),
    ("[energies]\nvalues = 1\n[run]\ninitial = 0000\nJ_max = ten\n", "J_max"),
    ("[energies]\nvalues = 1\n[run]\ninitial = 0000\n[plot]\nx = 1\n", "unknown"),
    ("[energies]\nlog_min = 1\n[run]\ninitial = 0000\n", "log_max"),
])
def test_load_config_errors(text, msg):
    with pytest.raises(ConfigurationError, match=msg):
        load_config(text, is_text=True)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "nope.ini")


def test_scan_invariants(small):
    assert len(small.points) == 2
    for p in small.points:
        assert p.ok and p.j_max_used == 2
        assert p.unitarity_defect <= 1e-8 and p.symmetry_defect <= 1e-8
        assert p.table.total_inelastic > 0
        assert set(p.rates) == set(p.table.sigma)
    # J = 2 is far from converged here, so the run reports it
    assert small.failed and len(small.warnings) == 2


def test_detailed_balance_from_run(small):
    # reverse transition from the same S blocks, i.e. at the same total energy
    p = small.points[0]
    init = p.initial
    for f_lab, f in p.table.finals.items():
        rev = cross_sections(p.s_blocks, f, 0.0, SMALL.symmetry)
        lhs = p.table.k_initial**2 * init.degeneracy * p.table[f]
        rhs = rev.k_initial**2 * f.degeneracy * rev[init]
        assert lhs == pytest.approx(rhs, rel=1e-6)


def test_csv_layout(small):
    text = write_scan_csv(small)
    lines = text.splitlines()
    header = [n for n, l in enumerate(lines) if not l.startswith("#")][0]
    assert lines[header].split(",") == CSV_COLUMNS
    rows = [l.split(",") for l in lines[header + 1:] if not l.startswith("#")]
    assert {r[2] for r in rows} >= {"(0000)", "(0200)", "inelastic_total", "WARNING"}
    energies = [float(r[0]) for r in rows]
    assert energies == sorted(energies)
    assert "config_sha256 = " + SMALL.digest in text
    inel = write_scan_csv(small, finals="inelastic")
    assert ",(0200),(0200)," not in inel


def test_threads_give_identical_csv(small):
    other = run_scan(SMALL.replace(threads=3))
    assert write_scan_csv(other) == write_scan_csv(small)


def test_isotropic_only_has_no_inelastic_scattering():
    res = run_scan(SMALL.replace(isotropic_only=True), keep_smatrix=True)
    for p in res.points:
        assert p.table.total_inelastic == 0.0
        assert p.table.elastic > 0
        for sb in p.s_blocks:
            if sb.S.size:
                assert np.max(np.abs(sb.S - np.diag(np.diag(sb.S)))) <= 1e-12


def test_b_zero_switches_off_vibrational_transfer():
    cfg = RunConfig(energies=(1.0,), initial=((1, 0, 0, 2),), J_max=0, pes_b=0.0, pw_tol=1.0)
    tab = run_scan(cfg).points[0].table
    same_v = [k for k in tab.sigma if sorted(k[::2]) == [0, 1]]
    other_v = [k for k in tab.sigma if sorted(k[::2]) != [0, 1]]
    assert len(other_v) == 3 and len(same_v) == 3
    assert all(tab.sigma[k] < 1e-30 * tab.elastic for k in other_v)
    assert all(tab.sigma[k] > 0 for k in same_v)
    # [v1 j1; v2 j2] -> [v2 j1; v1 j2] needs Delta v on both molecules
    dcfg = cfg.replace(symmetry=Symmetry.DISTINGUISHABLE, initial=((1, 0, 0, 2),))
    d = distinguishable_decomposition(dcfg, (1, 0, 0, 2), 1.0)
    assert d["vibrational"][0] == (0, 0, 1, 2) and d["vibrational"][1] < 1e-30 * d["rotational"][1]


def test_j_limit_extension_matches_plain_run():
    cfg = SMALL.replace(energies=(1.0,), J_limit=8, pw_tol=2e-2)
    ext = run_scan(cfg)
    p = ext.points[0]
    assert 2 < p.j_max_used <= 8 and p.j_max_contribution < 2e-2
    plain = run_scan(cfg.replace(J_max=p.j_max_used, J_limit=None)).points[0]
    assert p.table.sigma == pytest.approx(plain.table.sigma, rel=1e-12)
    assert "extended up to 8" in write_scan_csv(ext)


def test_failed_point_becomes_error_row(monkeypatch):
    import diatomscat.driver as drv

    def broken(blk, totals, grid, *a):
        return ["forced failure"] * totals.size
    monkeypatch.setattr(drv, "_solve_block", broken)
    res = run_scan(SMALL.replace(energies=(1.0,)))
    assert res.failed and not res.points[0].ok
    assert ",ERROR," in write_scan_csv(res)


def test_distribution_and_pathway_helpers():
    rows = final_state_distribution(SMALL.replace(pw_tol=1.0), "0200", 1.0)
    # (0202) is closed at 1 K
    assert [c.labels for c, _ in rows] == [(0, 0, 0, 0), (0, 2, 0, 0)]
    assert all(s > 0 for _, s in rows)
    assert pathway_finals((1, 0, 0, 2)) == ((1, 2, 0, 0), (0, 0, 1, 2))
    assert family((1, 2, 0, 0)) == "(v2v'0)"
    with pytest.raises(ConfigurationError):
        distinguishable_decomposition(SMALL, (0, 2, 0, 0), 1.0)


def test_distinguishable_relabeling_symmetry():
    cfg = SMALL.replace(symmetry=Symmetry.DISTINGUISHABLE, energies=(1.0,),
                        initial=((0, 2, 0, 0), (0, 0, 0, 2)), J_max=1, pw_tol=1.0)
    res = run_scan(cfg)
    a, b = (res.point(lab, 1.0).table for lab in cfg.initial)
    assert len(a.sigma) == 3
    for (v1, j1, v2, j2), s in a.sigma.items():
        assert b[(v2, j2, v1, j1)] == pytest.approx(s, rel=1e-10)


def test_pathways_vanish_without_anisotropy():
    cfg = RunConfig(energies=(1e-6,), initial=((1, 0, 0, 2),), J_max=0, isotropic_only=True,
                    symmetry=Symmetry.DISTINGUISHABLE, pw_tol=1.0)
    d = distinguishable_decomposition(cfg, (1, 0, 0, 2), 1e-6)
    assert d["rotational"][1] == 0.0 and d["vibrational"][1] == 0.0


def test_exchange_averaging_keeps_swap_symmetry_and_zeros():
    cfg = RunConfig(energies=(1.0,), initial=((1, 0, 0, 2),), symmetry=Symmetry.DISTINGUISHABLE, pes_b=0.0)
    setup = _Setup(cfg)
    blk = setup.build(1, -1)
    perm, sign = exchange_operator(blk)
    assert np.array_equal(perm[perm], np.arange(blk.size))
    P = np.zeros((blk.size, blk.size))
    P[perm, np.arange(blk.size)] = sign
    W = blk.w(2.2)
    assert np.allclose(P @ W @ P.T, W, rtol=0, atol=1e-12 * np.abs(W).max())
    totals = np.array([blk.thresholds[0] + 5.0])
    sym = _solve_block(blk, totals, cfg.grid, True)[0]
    raw = _solve_block(blk, totals, cfg.grid, False)[0]
    assert np.max(np.abs(sym.S - raw.S)) < 1e-8
    Po = P[np.ix_([blk.channels.index(c) for c in sym.channels], [blk.channels.index(c) for c in sym.channels])]
    assert np.max(np.abs(Po @ sym.S @ Po.T - sym.S)) < 1e-13
    # couplings that vanish by symmetry stay exactly zero
    assert np.array_equal(sym.S == 0, raw.S == 0)
