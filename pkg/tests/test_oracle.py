import numpy as np
import pytest
from scipy.integrate import quad

from mlpaths.errors import NoFixedPointError
from mlpaths.oracle import (exact_action_catalog, find_nonuniform_fixed_point, fixed_point_residual,
                            harmonic_decomposition_check, oscillator_period, oscillator_period_elliptic)
from mlpaths.spde import ac_energy


# -- oscillator period -------------------------------------------------------

def test_period_small_amplitude_limit():
    kappa = 0.005
    assert oscillator_period(-0.2499, kappa) == pytest.approx(2 * np.pi * np.sqrt(kappa), rel=1e-2)


def test_period_mid_range_against_dense_quadrature():
    E, kappa = -0.1, 0.005
    qr = np.sqrt(1 - 2 * np.sqrt(-E))
    # direct integral in q, endpoint singularities left to the adaptive rule
    f = lambda q: np.sqrt(kappa) / np.sqrt(2 * E + (1 - q * q) ** 2 / 2)
    ref = 2 * quad(f, -qr, qr, limit=10**4, epsabs=0, epsrel=1e-12)[0]
    assert oscillator_period(E, kappa) == pytest.approx(ref, rel=1e-6)
    assert oscillator_period(E, kappa) == pytest.approx(oscillator_period_elliptic(E, kappa), rel=1e-12)


def test_period_grows_without_bound_toward_separatrix():
    # the period diverges logarithmically as E -> 0-
    kappa = 0.005
    Es = [-1e-4, -1e-8, -1e-12]
    P = [oscillator_period(E, kappa) for E in Es]
    assert P[0] < P[1] < P[2]
    # equal steps in log(-E) add (nearly) equal period increments
    assert (P[2] - P[1]) == pytest.approx(P[1] - P[0], rel=0.05)


def test_period_monotone_in_energy():
    kappa = 0.01
    Es = np.linspace(-0.25, 0, 52)[1:-1]
    P = np.array([oscillator_period(E, kappa) for E in Es])
    assert np.all(np.diff(P) > 0)


@pytest.mark.parametrize("E", [-0.25, 0.0, 0.1])
def test_period_domain(E):
    with pytest.raises(ValueError):
        oscillator_period(E, 0.01)


# -- fixed points ------------------------------------------------------------

@pytest.mark.parametrize("kappa,m,anchor", [(0.005, 1, 0.2665), (0.005, 2, 0.4851)])
def test_nucleation_actions(kappa, m, anchor):
    fp = find_nonuniform_fixed_point(kappa, m)
    assert fp.exact_action == pytest.approx(anchor, abs=5e-4)
    assert oscillator_period(fp.energy_level, kappa) == pytest.approx(1 / m, rel=1e-10)
    # the stored V agrees with the spectral energy of the sampled profile
    u = fp.on_grid(256)
    assert 2 * ac_energy(u, kappa) == pytest.approx(fp.exact_action, abs=1e-8)


def test_fixed_point_residual_small():
    fp = find_nonuniform_fixed_point(0.005, 1)
    assert fixed_point_residual(fp.on_grid(256), 0.005) < 1e-8


def test_fixed_point_even_about_extremum():
    fp = find_nonuniform_fixed_point(0.005, 1)
    x = np.linspace(0, 0.5, 101)
    # the profile starts at its minimum (x = 0) and is even about it and about x = 1/2
    np.testing.assert_allclose(fp(x), fp(-x % 1.0), atol=1e-8)
    np.testing.assert_allclose(fp(0.5 + x), fp(0.5 - x), atol=1e-8)


def test_no_fixed_point_past_threshold():
    with pytest.raises(NoFixedPointError):
        find_nonuniform_fixed_point(0.05, 2)
    with pytest.raises(NoFixedPointError):
        find_nonuniform_fixed_point(1 / (2 * np.pi) ** 2 * 1.01, 1)


# -- catalog and decomposition check ----------------------------------------

def test_exact_action_catalog():
    rows = {(r["system"], r["crossing"]): r["action"] for r in exact_action_catalog()}
    assert rows[("sde2d", "saddle (1, 0)")] == pytest.approx(0.5)
    assert rows[("sde3d_rot", "orbit x^2 + y^2 = 1")] == pytest.approx(0.5)
    assert rows[("sde3d_nonrot", "orbit x^4 + y^4 = 16")] == pytest.approx(5 / 6)
    assert rows[("ac1d(kappa=0.01)", "uniform u = 0")] == 0.5
    assert rows[("ac1d(kappa=0.01)", "1-nucleation orbit")] == pytest.approx(0.3732, abs=5e-4)


def test_harmonic_decomposition_check():
    rep = harmonic_decomposition_check()
    assert rep["zero_residual"] == 0.0
    assert rep["harmonic_residual"] > 0.1
    assert rep["optimized_grad_norm"] < 1e-4
