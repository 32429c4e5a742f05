import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlpaths.core import SolverConfig
from mlpaths.gmam import geometric_action, gmam_gradient, gmam_minimize
from mlpaths.oracle import find_nonuniform_fixed_point, shear_ansatz_residual
from mlpaths.spde import (INITIAL_KINDS, SpectralField, ac_drift, ac_energy, ac_energy_gradient,
                          ac_strang_step, field_path_snapshots, initial_field_path, spde_geometric_action,
                          spde_gmam_gradient, torus)
from mlpaths.systems import ac1d, ac2d


def band_limited(N, dim=1, seed=0, modes=4, amp=0.6):
    rng = np.random.default_rng(seed)
    g = np.arange(N) / N
    if dim == 1:
        u = 0.2 * rng.normal()
        for k in range(1, modes + 1):
            u = u + amp / k * (rng.normal() * np.cos(2 * np.pi * k * g) + rng.normal() * np.sin(2 * np.pi * k * g))
        return u
    x, y = g[:, None], g[None, :]
    u = 0.2 * rng.normal() + 0 * x * y
    for k in range(1, modes + 1):
        for l in range(0, modes + 1):
            a, b = rng.normal(size=2) * amp / (k + l)
            u = u + a * np.cos(2 * np.pi * (k * x + l * y)) + b * np.sin(2 * np.pi * (k * x - l * y))
    return u


def random_field_path(n, N, dim, seed, modes=2):
    """Linear path between -1 and +1 plus low-mode random fields on the interior."""
    X = initial_field_path("linear", n, N, dim=dim)
    for k in range(1, n):
        X[k] = X[k] + 0.3 * band_limited(N, dim, seed=seed * 100 + k, modes=modes)
    return X


# -- fields ------------------------------------------------------------------

@pytest.mark.parametrize("value", [0.0, 1.0, -1.0])
@pytest.mark.parametrize("shear,dim", [("uniform", 1), ("siny", 2), ("none", 2)])
def test_uniform_fixed_points(value, shear, dim):
    u = np.full((16,) * dim, value)
    assert np.max(np.abs(ac_drift(u, 0.01, 0.3, shear, dim))) < 1e-14


def test_drift_against_finite_difference_oracle():
    kappa, c = 0.01, 0.2
    Nf = 4096
    xf = np.arange(Nf) / Nf
    uf = np.sin(2 * np.pi * xf)
    dx = 1.0 / Nf
    uxx = (np.roll(uf, -1) - 2 * uf + np.roll(uf, 1)) / dx**2
    ux = (np.roll(uf, -1) - np.roll(uf, 1)) / (2 * dx)
    fd = kappa * uxx + uf - uf**3 + c * ux
    N = 64
    drift = ac_drift(np.sin(2 * np.pi * np.arange(N) / N), kappa, c, dealias=False)
    assert np.max(np.abs(drift - fd[:: Nf // N])) < 1e-6


def test_drift_at_oracle_fixed_point():
    fp = find_nonuniform_fixed_point(0.005, 1)
    u = fp.on_grid(128)
    assert torus(128).norm(ac_drift(u, 0.005, 0.0, dealias=False)) < 1e-6


def test_hermitian_after_operations():
    u = band_limited(32, 2, seed=4)
    v = ac_drift(u, 0.01, 0.1, "siny", 2)
    assert SpectralField(v, 2).hermitian_residual() < 1e-10
    assert SpectralField(ac_strang_step(u, 0.01, 0.1, 0.01, "siny", 2), 2).hermitian_residual() < 1e-10


def test_unknown_shear_and_bad_dim():
    with pytest.raises(ValueError):
        ac_drift(np.zeros(16), 0.01, 0.1, "twist")
    with pytest.raises(ValueError):
        ac_drift(np.zeros(16), 0.01, 0.1, "siny", dim=1)


# -- energy ------------------------------------------------------------------

def test_energy_examples():
    assert ac_energy(np.ones(32), 0.01) == 0.0
    assert ac_energy(-np.ones(32), 0.01) == 0.0
    assert ac_energy(np.zeros(32), 0.01) == pytest.approx(0.25)
    fp = find_nonuniform_fixed_point(0.005, 1)
    assert 2 * ac_energy(fp.on_grid(256), 0.005) == pytest.approx(0.2665, abs=5e-4)


def test_energy_gradient_matches_finite_difference():
    u = band_limited(32, 1, seed=1)
    w = band_limited(32, 1, seed=2)
    eps = 1e-6
    fd = (ac_energy(u + eps * w, 0.01) - ac_energy(u - eps * w, 0.01)) / (2 * eps)
    g = ac_energy_gradient(u, 0.01, dealias=False)
    assert np.mean(g * w) == pytest.approx(fd, rel=1e-7)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.floats(-1, 1))
def test_spectral_orthogonality(seed, c):
    T = torus(64)
    u = band_limited(64, 1, seed)
    # <dV/du, c u_x> vanishes for every band-limited field
    assert abs(T.inner(ac_energy_gradient(u, 0.01, dealias=False), c * T.dx(u))) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_advection_has_zero_mean(seed):
    T = torus(32, 2)
    u = band_limited(32, 2, seed)
    g = np.sin(2 * np.pi * T.y)
    assert abs(T.mean(g * T.dx(u))) < 1e-12
    T1 = torus(64)
    assert abs(T1.mean(T1.dx(band_limited(64, 1, seed)))) < 1e-12


# -- time stepping -----------------------------------------------------------

def test_strang_preserves_uniform_state():
    np.testing.assert_array_equal(ac_strang_step(np.ones(32), 0.01, 0.1, 0.01), np.ones(32))


def test_exponential_diffusion_is_exact():
    T = torus(32)
    kappa, h = 0.01, 0.05
    # a zero-reaction, zero-advection split reduces to the exact heat semigroup
    from mlpaths.spde import strang_step

    for k in (1, 3, 7):
        u = np.cos(2 * np.pi * k * T.x)
        out = strang_step(u, h, T, kappa, lambda v: 0 * v)
        np.testing.assert_allclose(out, np.exp(-kappa * (2 * np.pi * k) ** 2 * h) * u, atol=1e-14)


def test_traveling_wave_returns_after_one_period():
    kappa, c, N, h = 0.005, 0.1, 64, 1e-3
    fp = find_nonuniform_fixed_point(kappa, 1)
    u0 = fp.on_grid(N)
    u = u0.copy()
    for _ in range(int(round(1 / (c * h)))):
        u = ac_strang_step(u, kappa, c, h, dealias=False)
    assert torus(N).norm(u - u0) < 1e-3


@pytest.mark.parametrize("dim,shear", [(1, "uniform"), (2, "siny")])
def test_lyapunov_decay(dim, shear):
    N = 32 if dim == 1 else 16
    u = band_limited(N, dim, seed=9)
    kappa, c, h = 0.01, 0.3, 1e-3
    V = [ac_energy(u, kappa, dim)]
    for _ in range(300):
        u = ac_strang_step(u, kappa, c, h, shear, dim)
        V.append(ac_energy(u, kappa, dim))
    dV = np.diff(V)
    assert np.all(dV <= 10 * h**2)
    assert V[-1] < V[0]


# -- field gMAM --------------------------------------------------------------

@pytest.mark.parametrize("dealias", [False, True])
@pytest.mark.parametrize("dim,shear,c", [(1, "uniform", 0.1), (2, "siny", 0.1), (2, "none", 0.0)])
def test_spde_gradient_matches_finite_differences(dim, shear, c, dealias):
    # two-mode fields keep every cubic product below the Nyquist mode, where the
    # expanded adjoint is exact on the grid
    n, N, kappa = 10, 16, 0.01
    X = random_field_path(n, N, dim, seed=3)
    G = spde_gmam_gradient(X, kappa, c, shear, dim, dealias)
    T = torus(N, dim)
    rng = np.random.default_rng(7)
    for _ in range(3):
        eta = np.zeros_like(X)
        for k in range(1, n):
            eta[k] = band_limited(N, dim, seed=int(rng.integers(1e9)), modes=2)
        eps = 1e-6
        S = lambda Y: spde_geometric_action(Y, kappa, c, shear, dim, dealias, quadrature="midpoint")
        fd = (S(X + eps * eta) - S(X - eps * eta)) / (2 * eps)
        analytic = np.sum(T.inner(G, eta)) / n
        assert analytic == pytest.approx(fd, rel=1e-3)


@pytest.mark.parametrize("dealias", [False, True])
def test_spde_gradient_equals_generic_gradient(dealias):
    n, N, kappa, c = 8, 16, 0.01, 0.1
    s = ac1d(kappa=kappa, c=c, N=N, dealias=dealias)
    X = random_field_path(n, N, 1, seed=5)
    G1 = spde_gmam_gradient(X, kappa, c, "uniform", 1, dealias)
    G2 = gmam_gradient(X, s)
    assert np.max(np.abs(G1 - G2)) < 1e-6
    assert spde_geometric_action(X, kappa, c, dealias=dealias) == pytest.approx(geometric_action(X, s), rel=1e-12)


def test_spde_gradient_uniform_path_has_no_spatial_part():
    n, N, kappa = 20, 16, 0.01
    s = ac2d(kappa=kappa, c=0.0, N=N)
    X = initial_field_path("linear", n, N, dim=2).reshape(n + 1, -1)
    rep = gmam_minimize(s, X, SolverConfig(n=n, h=0.01, threshold=1e-6, max_steps=3000))
    P = rep.path.points.reshape((n + 1, N, N))
    G = spde_gmam_gradient(P, kappa, 0.0, "none", 2)
    spatial = G - G.mean(axis=(1, 2), keepdims=True)
    assert np.max(np.abs(spatial)) < 1e-3


def test_uniform_crossing_action():
    n, N, kappa = 60, 16, 0.005
    s = ac1d(kappa=kappa, c=0.1, N=N)
    X = initial_field_path("linear", n, N, dim=1).reshape(n + 1, -1)
    rep = gmam_minimize(s, X, SolverConfig(n=n, h=0.01, threshold=1e-7, max_steps=5000))
    assert rep.action == pytest.approx(0.5, abs=2e-3)


# -- initial paths ------------------------------------------------------------

def test_initial_linear_midpoint():
    n = 5  # n + 1 = 6 fields; j = (n + 2) / 2 is not an integer, so use n = 4 too
    X = initial_field_path("linear", 4, 16, dim=1)
    np.testing.assert_allclose(X[2], 0.0, atol=1e-15)
    X = initial_field_path("linear", n, 16, dim=2)
    np.testing.assert_allclose(X[0], -1.0)
    np.testing.assert_allclose(X[-1], 1.0)


def test_initial_horizontal_ridge():
    n, N = 10, 16
    X = initial_field_path("horizontal", n, N, dim=2)
    # at j = n and y = 0.5 the Gaussian peak gives 1
    assert X[n - 1][:, N // 2] == pytest.approx(np.ones(N))


def test_initial_radial_centre():
    X = initial_field_path("radial", 6, 16, dim=2)
    for k in range(1, 7):
        assert X[k][8, 8] == pytest.approx(1.0)


@pytest.mark.parametrize("kind", INITIAL_KINDS)
def test_initial_kinds_endpoints(kind):
    X = initial_field_path(kind, 6, 16, dim=2)
    assert X.shape == (7, 16, 16)
    np.testing.assert_array_equal(X[0], -1.0)
    np.testing.assert_array_equal(X[-1], 1.0)
    assert np.all(X >= -1) and np.all(X <= 1)


def test_initial_unknown_kind():
    with pytest.raises(ValueError):
        initial_field_path("spiral", 6, 16)


def test_snapshots():
    idx = field_path_snapshots(np.zeros((41, 4)), 7)
    assert len(idx) == 7 and idx[0] == 0 and idx[-1] == 40


# -- sheared vertical fixed point --------------------------------------------

def test_shear_ansatz_residual_superlinear():
    kappa = 0.005
    fp = find_nonuniform_fixed_point(kappa, 1)
    cs = np.array([0.002, 0.005, 0.01])
    r = np.array([shear_ansatz_residual(kappa, c, 128, fp) for c in cs])
    slope = np.polyfit(np.log(cs), np.log(r), 1)[0]
    assert slope > 1


# -- field gMAM runs ---------------------------------------------------------

@pytest.mark.slow
def test_ac1d_gmam_single_nucleation():
    n = 40
    s = ac1d(kappa=0.01, c=0.1, N=64)
    X0 = initial_field_path("horizontal", n, 64, dim=1).reshape(n + 1, -1)
    rep = gmam_minimize(s, X0, SolverConfig(n=n, h=0.01, threshold=1e-6, max_steps=40000))
    assert rep.action == pytest.approx(0.3983, abs=3e-3)


@pytest.mark.slow
def test_ac2d_elliptical_below_horizontal_crossing():
    # shear lowers the barrier below the unsheared nucleation value
    n = 40
    s = ac2d(kappa=0.01, c=0.1, N=32)
    X0 = initial_field_path("elliptical", n, 32, dim=2).reshape(n + 1, -1)
    rep = gmam_minimize(s, X0, SolverConfig(n=n, h=0.01, threshold=1e-6, max_steps=3000))
    assert rep.action < 0.3732
