import numpy as np
import pytest

from diatomscat.diatom import (ConvergenceError, DiatomCurve, GridSpec, LevelSet, NoSuchLevelError,
                               effective_b, morse_levels, preset_curve, radial_integral, resonance_gap,
                               solve_level)
from diatomscat.units import CM_TO_K, H_ATOM_MASS, hbar2_2mu
from oracles import sinc_dvr_levels

H2 = preset_curve("h2-like")
GRID = GridSpec(0.2, 3.5, 3301)


@pytest.fixture(scope="module")
def h2_levels():
    return LevelSet(H2, GRID)


def test_morse_j0_matches_closed_form():
    ref = morse_levels(H2.d_e, H2.a, H2.r_e, H2.reduced_mass, 8)
    assert len(ref) == 9
    for v in range(9):
        assert abs(solve_level(H2, v, 0, GRID).energy - ref[v]) <= 1e-8 * H2.d_e


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_morse_rotating_matches_dvr(j):
    b = hbar2_2mu(H2.reduced_mass)
    ref = sinc_dvr_levels(lambda r: H2(r) + b * j * (j + 1) / r**2, GRID.r_min, GRID.r_max, 700, b, 9)
    for v in range(9):
        assert abs(solve_level(H2, v, j, GRID).energy - ref[v]) <= 1e-8 * H2.d_e


def test_box_levels():
    mass, length = 1.0, 2.0
    box = DiatomCurve.tabulated(np.linspace(0, length, 5), np.zeros(5), mass, dissociation=np.inf)
    b = hbar2_2mu(mass)
    for n in (1, 2, 3, 5):
        e = solve_level(box, n - 1, 0, GridSpec(0.0, length, 2001)).energy
        assert e == pytest.approx(n * n * np.pi**2 * b / length**2, rel=1e-8)


def test_numerov_fourth_order_convergence():
    ref = morse_levels(H2.d_e, H2.a, H2.r_e, H2.reduced_mass, 3)[3]
    errs = [abs(solve_level(H2, 3, 0, GridSpec(0.2, 3.5, n)).energy - ref) for n in (201, 401, 801)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 14.0 < coarse / fine < 18.0


def test_wavefunction_normalized_with_v_nodes():
    for v, j in [(0, 0), (1, 2), (4, 3), (7, 0)]:
        lev = solve_level(H2, v, j, GRID)
        assert radial_integral(lev, lev) == pytest.approx(1.0, abs=1e-10)
        chi = lev.wavefunction
        big = chi[np.abs(chi) > 1e-8 * np.abs(chi).max()]
        assert np.count_nonzero(np.diff(np.sign(big)) != 0) == v


def test_levels_orthogonal_within_j():
    a, b = solve_level(H2, 0, 2, GRID), solve_level(H2, 1, 2, GRID)
    assert abs(radial_integral(a, b)) < 1e-8


def test_radial_integral_symmetric():
    a, b = solve_level(H2, 0, 0, GRID), solve_level(H2, 1, 0, GRID)
    w = lambda r: r - H2.r_e
    assert radial_integral(a, b, w) == radial_integral(b, a, w)
    assert radial_integral(a, b, w) != 0.0
    other = solve_level(H2, 0, 0, GridSpec(0.2, 3.5, 1001))
    with pytest.raises(ValueError):
        radial_integral(a, other)


def test_deterministic():
    a, b = solve_level(H2, 2, 3, GRID), solve_level(H2, 2, 3, GRID)
    assert a.energy == b.energy and np.array_equal(a.wavefunction, b.wavefunction)


def test_unbound_level_raises():
    with pytest.raises(NoSuchLevelError):
        solve_level(H2, 60, 0, GRID)


def test_too_coarse_grid_raises():
    with pytest.raises((ConvergenceError, NoSuchLevelError)):
        solve_level(H2, 8, 0, GridSpec(0.2, 3.5, 12))


def test_calibrated_gap_within_two_kelvin(h2_levels):
    gap_k = resonance_gap(h2_levels) * CM_TO_K
    assert abs(gap_k - 25.45) <= 2.0
    # the gap is six times the difference of the effective rotational constants
    b0, b1 = effective_b(h2_levels, 0), effective_b(h2_levels, 1)
    assert resonance_gap(h2_levels) == pytest.approx(6 * (b0 - b1), rel=1e-12)
    assert b1 < b0


def test_effective_b_decreases_with_v(h2_levels):
    bs = [effective_b(h2_levels, v) for v in range(4)]
    assert all(x > y for x, y in zip(bs, bs[1:]))


def test_morse_levels_spacing_example():
    mass = H_ATOM_MASS / 2
    b = hbar2_2mu(mass)
    omega, wx = 4401.2, 121.3
    curve = DiatomCurve.from_constants(omega, wx, 0.7414, mass)
    assert curve.omega_e == pytest.approx(omega, rel=1e-12)
    assert curve.omega_e_xe == pytest.approx(wx, rel=1e-12)
    e = morse_levels(curve.d_e, curve.a, curve.r_e, mass, 1)
    assert e[1] - e[0] == pytest.approx(4158.6, abs=1e-9)
    assert b > 0


def test_morse_levels_drop_unbound_and_harmonic_limit():
    mass = 0.5
    curve = DiatomCurve.from_constants(1000.0, 100.0, 1.0, mass)
    levels = morse_levels(curve.d_e, curve.a, curve.r_e, mass, 50)
    assert len(levels) < 51
    assert all(e < curve.d_e for e in levels)
    # fixed omega_e, D_e -> infinity: spacing -> omega_e
    big = DiatomCurve.from_constants(1000.0, 1e-6, 1.0, mass)
    e = morse_levels(big.d_e, big.a, big.r_e, mass, 3)
    assert np.allclose(np.diff(e), 1000.0, rtol=1e-7)


def test_tabulated_from_file_reproduces_morse(tmp_path):
    r = np.linspace(0.2, 3.5, 1201)
    path = tmp_path / "curve.dat"
    np.savetxt(path, np.column_stack([r, H2(r)]), header="r V")
    tab = DiatomCurve.from_file(path, H2.reduced_mass, dissociation=H2.d_e)
    e_tab = solve_level(tab, 1, 2, GRID).energy
    assert e_tab == pytest.approx(solve_level(H2, 1, 2, GRID).energy, abs=1e-3)


@pytest.mark.parametrize("bad", [
    lambda: DiatomCurve.morse(-1.0, 1.0, 1.0, 1.0),
    lambda: DiatomCurve.tabulated([0.0, 1.0], [0.0, 1.0], 1.0),
    lambda: DiatomCurve.tabulated([0.0, 2.0, 1.0], [0.0, 1.0, 2.0], 1.0),
    lambda: GridSpec(1.0, 0.5, 10),
    lambda: preset_curve("n2-like"),
])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()
