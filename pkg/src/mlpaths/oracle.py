"""Reference values computed independently of the path solvers.

The steady states of ``kappa u'' + u - u^3 = 0`` form a Hamiltonian
oscillator with energy ``E = kappa u'^2 / 2 - (1 - u^2)^2 / 4`` in
``(-1/4, 0)``; each periodic orbit of spatial period ``1/N`` is a
non-uniform fixed point of the 1D Allen-Cahn drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, least_squares
from scipy.special import ellipk

from .errors import NoFixedPointError


def _turning_point_sq(E):
    return 1.0 - 2.0 * np.sqrt(-E)


def oscillator_period(E: float, kappa: float) -> float:
    """Spatial period of the oscillator orbit with energy ``E``.

    With ``q = q_r sin(theta)`` the inverse-square-root endpoint
    singularities disappear and the integrand is smooth.
    """
    if not (-0.25 < E < 0):
        raise ValueError(f"E must lie in (-1/4, 0), got {E}")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    qr2 = _turning_point_sq(E)

    def integrand(theta):
        return 1.0 / np.sqrt(2.0 - qr2 * (1.0 + np.sin(theta) ** 2))

    val, _ = quad(integrand, 0.0, np.pi / 2, epsabs=0, epsrel=1e-13, limit=500)
    return float(4.0 * np.sqrt(2.0 * kappa) * val)


def oscillator_period_elliptic(E: float, kappa: float) -> float:
    """Closed form of :func:`oscillator_period` via the complete elliptic integral K."""
    if not (-0.25 < E < 0):
        raise ValueError(f"E must lie in (-1/4, 0), got {E}")
    qr2 = _turning_point_sq(E)
    return float(4 * np.sqrt(2 * kappa) / np.sqrt(2 - qr2) * ellipk(qr2 / (2 - qr2)))


@dataclass
class FixedPointProfile:
    """A ``1/N``-periodic solution of ``kappa u'' + u - u^3 = 0`` starting at its minimum."""

    kappa: float
    n_period: int
    energy_level: float
    q_min: float
    sol: object            # dense output over one period
    V: float               # Allen-Cahn energy over the unit circle

    @property
    def period(self):
        return 1.0 / self.n_period

    def __call__(self, x):
        return self._eval(x, 0)

    def derivative(self, x):
        return self._eval(x, 1)

    def _eval(self, x, row):
        x = np.mod(np.asarray(x, dtype=float), self.period)
        return self.sol(x.ravel())[row].reshape(x.shape)

    def on_grid(self, N: int, shift: float = 0.0):
        return self(np.arange(N) / N + shift)

    @property
    def exact_action(self):
        """Barrier action ``2 (V[u] - V[-1])`` for crossing at this state."""
        return 2.0 * self.V


def find_nonuniform_fixed_point(kappa: float, n_period: int = 1, rtol: float = 1e-12) -> FixedPointProfile:
    """Non-uniform steady state of the 1D Allen-Cahn drift with period ``1/n_period``."""
    if kappa <= 0 or n_period < 1:
        raise ValueError("kappa must be positive and n_period a positive integer")
    L = 1.0 / n_period
    if 2 * np.pi * np.sqrt(kappa) >= L:
        raise NoFixedPointError(kappa, n_period)

    # the period grows without bound as E -> 0, so this bracket suffices
    lo, hi = -0.25 + 1e-15, -1e-14
    if oscillator_period(hi, kappa) < L:
        raise NoFixedPointError(kappa, n_period)
    E = brentq(lambda e: oscillator_period(e, kappa) - L, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    q0 = -np.sqrt(_turning_point_sq(E))

    def rhs(x, y):
        u, p, _ = y
        return [p, (u**3 - u) / kappa, 0.5 * kappa * p * p + 0.25 * (1 - u * u) ** 2]

    sol = solve_ivp(rhs, (0.0, L), [q0, 0.0, 0.0], method="DOP853",
                    rtol=rtol, atol=1e-13, dense_output=True)
    if not sol.success:
        raise RuntimeError(sol.message)
    V = n_period * sol.y[2, -1]
    return FixedPointProfile(kappa, n_period, E, q0, sol.sol, float(V))


def fixed_point_residual(u, kappa, dim=1):
    """L^2 norm of ``kappa u'' + u - u^3`` for grid values ``u`` (spectral derivative, no dealiasing)."""
    from .spde import torus

    u = np.asarray(u, dtype=float)
    T = torus(u.shape[-1], dim, dealias=False)
    return float(T.norm(kappa * T.lap(u) + u - u**3))


def exact_action_catalog():
    """Barrier actions ``2 (V(x_s) - V(x_a))`` for the benchmark crossings."""
    from .systems import get_system, exact_action

    rows = []
    for name, xs, label in [
        ("sde2d", (1.0, 0.0), "saddle (1, 0)"),
        ("sde3d_rot", (1.0, 0.0, 0.0), "orbit x^2 + y^2 = 1"),
        ("sde3d_nonrot", (2.0, 0.0, 0.0), "orbit x^4 + y^4 = 16"),
        ("double_well_1d", (0.0,), "saddle 0"),
    ]:
        rows.append({"system": name, "crossing": label, "action": exact_action(get_system(name), xs)})
    for kappa in (0.005, 0.01):
        # uniform saddle u = 0: V[0] = 1/4, V[-1] = 0
        rows.append({"system": f"ac1d(kappa={kappa})", "crossing": "uniform u = 0",
                     "action": 2 * (0.25 - 0.0)})
        for m in (1, 2):
            try:
                fp = find_nonuniform_fixed_point(kappa, m)
            except NoFixedPointError:
                continue
            rows.append({"system": f"ac1d(kappa={kappa})", "crossing": f"{m}-nucleation orbit",
                         "action": fp.exact_action})
    return rows


def shear_ansatz(kappa: float, c: float, N: int = 128, profile: FixedPointProfile | None = None):
    """Sheared 2D field ``v(x + c / (4 pi^2 kappa) sin(2 pi y))`` built from the 1-periodic fixed point ``v``."""
    v = profile or find_nonuniform_fixed_point(kappa, 1)
    g = np.arange(N) / N
    x, y = g[:, None], g[None, :]
    return v(x + c / (4 * np.pi**2 * kappa) * np.sin(2 * np.pi * y))


def shear_ansatz_residual(kappa: float, c: float, N: int = 128, profile=None) -> float:
    """L^2 norm of the 2D sheared drift evaluated at :func:`shear_ansatz`."""
    from .spde import ac_drift, torus

    u = shear_ansatz(kappa, c, N, profile)
    r = ac_drift(u, kappa, c, "siny", dim=2, dealias=False)
    return float(torus(N, 2, False).norm(r))


def harmonic_decomposition_check(degree: int = 4, grid: int = 41, seed: int = 0):
    """Search radial potentials ``V = sum_k a_k r^(2k)`` orthogonal to the rotation ``f = (p, -q)``.

    For any radial ``V`` the residual ``(f + grad V) . grad V`` equals
    ``|grad V|^2``, so the only exact solutions have ``grad V = 0``. The
    search starts from a random polynomial and drives the residual to zero.
    """
    g = np.linspace(-1, 1, grid)
    q, p = np.meshgrid(g, g, indexing="ij")
    r2 = q * q + p * p
    ks = np.arange(1, degree + 1)

    def gradV(a):
        dV = np.sum(a[:, None, None] * ks[:, None, None] * r2[None] ** (ks[:, None, None] - 1), axis=0)
        return 2 * dV * q, 2 * dV * p

    def residual(a):
        gq, gp = gradV(a)
        return ((p + gq) * gq + (-q + gp) * gp).ravel() / grid

    def grad_norm(a):
        gq, gp = gradV(a)
        return float(np.sqrt(np.mean(gq**2 + gp**2) * 4.0))

    def res_norm(a):
        return float(np.linalg.norm(residual(a)) * 2.0)

    harmonic = np.zeros(degree)
    harmonic[0] = 0.5
    rng = np.random.default_rng(seed)
    a0 = rng.normal(size=degree)
    fit = least_squares(residual, a0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000, method="lm")
    return {
        "zero_residual": res_norm(np.zeros(degree)),
        "harmonic_residual": res_norm(harmonic),
        "optimized_residual": res_norm(fit.x),
        "optimized_grad_norm": grad_norm(fit.x),
        "coefficients": fit.x,
    }
