"""Pseudospectral sheared Allen-Cahn dynamics on the unit torus.

Fields are real arrays on a uniform grid: shape ``(..., N)`` in 1D and
``(..., N, N)`` in 2D with axes ordered ``(x, y)``. The drift is

    u_t = kappa*Lap(u) + P(u - u^3) + g(y) u_x

with ``g = c`` ("uniform"), ``g = c sin(2 pi y)`` ("siny") or ``g = 0``
("none"), and ``P`` the 2/3-rule truncation of the cubic term.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BlowUpError, ConvergenceError, DegenerateNodeError
from .core import reparameterize_equal_arclength

SHEARS = ("none", "uniform", "siny")


class Torus:
    """Spectral operators on the unit torus of dimension 1 or 2 with ``N`` points per axis."""

    def __init__(self, N: int, dim: int = 1, dealias: bool = True):
        if dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if N < 4 or N % 2:
            raise ValueError("N must be even and >= 4")
        self.N, self.dim, self.dealias = N, dim, dealias
        full = np.fft.fftfreq(N, 1.0 / N)
        half = np.fft.rfftfreq(N, 1.0 / N)
        nyq = N // 2
        if dim == 1:
            kx = 2 * np.pi * half
            self.kx_d = np.where(np.abs(half) == nyq, 0.0, kx)
            self.ky_d = np.zeros_like(kx)
            self.k2 = kx**2
            self.mask = np.abs(half) <= N / 3
            self.axes = (-1,)
            self.x = np.arange(N) / N
            self.y = None
        else:
            kx = (2 * np.pi * full)[:, None]
            ky = (2 * np.pi * half)[None, :]
            self.kx_d = np.where(np.abs(full)[:, None] == nyq, 0.0, kx) + 0 * ky
            self.ky_d = np.where(np.abs(half)[None, :] == nyq, 0.0, ky) + 0 * kx
            self.k2 = kx**2 + ky**2
            self.mask = (np.abs(full)[:, None] <= N / 3) & (np.abs(half)[None, :] <= N / 3)
            self.axes = (-2, -1)
            g = np.arange(N) / N
            self.x = g[:, None] + 0 * g[None, :]
            self.y = g[None, :] + 0 * g[:, None]
        self.shape = (N,) * dim
        self.size = N**dim

    # transforms ---------------------------------------------------------------
    def hat(self, u):
        return np.fft.rfftn(u, axes=self.axes)

    def inv(self, uh):
        return np.fft.irfftn(uh, s=self.shape, axes=self.axes)

    # operators ----------------------------------------------------------------
    def lap(self, u):
        return self.inv(-self.k2 * self.hat(u))

    def dx(self, u):
        return self.inv(1j * self.kx_d * self.hat(u))

    def dy(self, u):
        return self.inv(1j * self.ky_d * self.hat(u))

    def dxy(self, u):
        return self.inv(-self.kx_d * self.ky_d * self.hat(u))

    def dxx(self, u):
        return self.inv(-(self.kx_d**2) * self.hat(u))

    def biharm(self, u):
        return self.inv(self.k2**2 * self.hat(u))

    def grad_sq(self, u):
        uh = self.hat(u)
        out = self.inv(1j * self.kx_d * uh) ** 2
        if self.dim == 2:
            out = out + self.inv(1j * self.ky_d * uh) ** 2
        return out

    def project(self, u):
        if not self.dealias:
            return u
        return self.inv(self.mask * self.hat(u))

    # L^2(torus) geometry --------------------------------------------------------
    def mean(self, u):
        return np.mean(u, axis=self.axes)

    def inner(self, u, v):
        return self.mean(u * v)

    def norm(self, u):
        return np.sqrt(self.inner(u, u))

    def flat(self, u):
        return np.reshape(u, np.shape(u)[: np.ndim(u) - self.dim] + (self.size,))

    def unflat(self, v):
        return np.reshape(v, np.shape(v)[:-1] + self.shape)


@lru_cache(maxsize=32)
def torus(N: int, dim: int = 1, dealias: bool = True) -> Torus:
    return Torus(N, dim, dealias)


def _resolve(u, shear, dim, dealias=True):
    if shear not in SHEARS:
        raise ValueError(f"unknown shear {shear!r}; expected one of {SHEARS}")
    if dim is None:
        dim = 2 if shear == "siny" else 1
    if shear == "siny" and dim != 2:
        raise ValueError("sin(2 pi y) shear needs a 2D field")
    u = np.asarray(u, dtype=float)
    return u, torus(u.shape[-1], dim, dealias)


def shear_profile(c, shear, T: Torus):
    """``g(y)``, ``g'(y)``, ``g''(y)`` broadcastable against fields on ``T``."""
    if shear == "none" or c == 0:
        return 0.0, 0.0, 0.0
    if shear == "uniform":
        return float(c), 0.0, 0.0
    w = 2 * np.pi
    return c * np.sin(w * T.y), c * w * np.cos(w * T.y), -c * w * w * np.sin(w * T.y)


@dataclass(frozen=True)
class SpectralField:
    """A real field on the torus with access to its spectrum."""

    values: np.ndarray
    dim: int = 1

    @property
    def N(self):
        return self.values.shape[-1]

    @property
    def grid(self) -> Torus:
        return torus(self.N, self.dim)

    @property
    def spectrum(self):
        return self.grid.hat(self.values)

    def hermitian_residual(self) -> float:
        """Largest imaginary part produced by a full complex round trip."""
        full = np.fft.fftn(self.values, axes=self.grid.axes)
        back = np.fft.ifftn(full, axes=self.grid.axes)
        return float(np.max(np.abs(back.imag)))


# ---------------------------------------------------------------------------
# drift, energy, stepping


def reaction(u):
    return u - u**3


def ac_drift(u, kappa, c=0.0, shear="uniform", dim=None, dealias=True):
    """Deterministic sheared Allen-Cahn velocity field."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    u, T = _resolve(u, shear, dim, dealias)
    uh = T.hat(u)
    out = T.inv(-kappa * T.k2 * uh) + T.project(reaction(u))
    g, _, _ = shear_profile(c, shear, T)
    if np.any(g != 0):
        out = out + g * T.inv(1j * T.kx_d * uh)
    return out


def ac_drift_vjp(u, w, kappa, c=0.0, shear="uniform", dim=None, dealias=True):
    """Adjoint linearization of :func:`ac_drift` at ``u`` applied to ``w``."""
    u, T = _resolve(u, shear, dim, dealias)
    w = np.asarray(w, dtype=float)
    out = kappa * T.lap(w) + (1 - 3 * u**2) * T.project(w)
    g, _, _ = shear_profile(c, shear, T)
    if np.any(g != 0):
        out = out - g * T.dx(w)
    return out


def ac_drift_jvp(u, v, kappa, c=0.0, shear="uniform", dim=None, dealias=True):
    u, T = _resolve(u, shear, dim, dealias)
    v = np.asarray(v, dtype=float)
    out = kappa * T.lap(v) + T.project((1 - 3 * u**2) * v)
    g, _, _ = shear_profile(c, shear, T)
    if np.any(g != 0):
        out = out + g * T.dx(v)
    return out


def ac_energy(u, kappa, dim=1):
    """``V[u] = int kappa |grad u|^2 / 2 + (1 - u^2)^2 / 4`` over the unit torus."""
    u = np.asarray(u, dtype=float)
    T = torus(u.shape[-1], dim)
    return T.mean(0.5 * kappa * T.grad_sq(u) + 0.25 * (1 - u**2) ** 2)


def ac_energy_gradient(u, kappa, dim=1, dealias=True):
    """L^2 gradient of the energy matching the drift: ``-(kappa Lap u + P(u - u^3))``."""
    u = np.asarray(u, dtype=float)
    T = torus(u.shape[-1], dim, dealias)
    return -(kappa * T.lap(u) + T.project(reaction(u)))


def strang_step(u, h, T: Torus, kappa, explicit_rhs, implicit_half=None):
    """Half Euler step of ``explicit_rhs``, exact diffusion step, half Euler step.

    The closing half step is backward Euler when ``implicit_half(v, dt)``
    (solving ``w - dt * rhs(w) = v``) is supplied. Forward then backward
    Euler is a symmetric pair, which makes the splitting second order; with
    forward Euler on both sides it is first order.
    """
    u = u + 0.5 * h * explicit_rhs(u)
    u = T.inv(np.exp(-kappa * T.k2 * h) * T.hat(u))
    if implicit_half is None:
        u = u + 0.5 * h * explicit_rhs(u)
    else:
        u = implicit_half(u, 0.5 * h)
    if not np.all(np.isfinite(u)):
        raise BlowUpError("field")
    return u


def _advection_inverse(T: Torus, g, dt):
    """Apply ``(I - dt g d/dx)^(-1)``; ``g`` depends on ``y`` only, so this is diagonal in ``k_x``."""
    if T.dim == 1:
        fac = 1.0 / (1.0 - dt * 1j * g * T.kx_d)
        return lambda v: T.inv(fac * T.hat(v))
    N = T.N
    kx = 2 * np.pi * np.fft.fftfreq(N, 1.0 / N)
    kx[N // 2] = 0.0
    grow = np.broadcast_to(g, T.shape)[0]
    fac = 1.0 / (1.0 - dt * 1j * kx[:, None] * grow[None, :])
    return lambda v: np.fft.ifft(fac * np.fft.fft(v, axis=-2), axis=-2).real


def ac_strang_step(u, kappa, c, h, shear="uniform", dim=None, dealias=True, tol=1e-14, max_iter=50):
    """One deterministic time step of length ``h``."""
    if h <= 0:
        raise ValueError("h must be positive")
    u, T = _resolve(u, shear, dim, dealias)
    g, _, _ = shear_profile(c, shear, T)
    has_shear = np.any(g != 0)

    def rhs(v):
        out = T.project(reaction(v))
        if has_shear:
            out = out + g * T.dx(v)
        return out

    def implicit_half(v, dt):
        # w = (I - dt g d/dx)^(-1) (v + dt P(w - w^3)), by fixed-point iteration;
        # the contraction factor is about dt * max|1 - 3 w^2|
        solve = _advection_inverse(T, g, dt) if has_shear else (lambda z: z)
        w = v + dt * rhs(v)
        scale = 1.0 + float(np.max(np.abs(v)))
        for _ in range(max_iter):
            w_new = solve(v + dt * T.project(reaction(w)))
            delta = float(np.max(np.abs(w_new - w)))
            w = w_new
            if delta <= tol * scale or not np.isfinite(delta):
                break
        return w

    return strang_step(u, h, T, kappa, rhs, implicit_half)


# ---------------------------------------------------------------------------
# geometric action and its gradient for field paths


def _field_terms(path, kappa, c, shear, dim, dealias):
    X = np.asarray(path, dtype=float)
    T = torus(X.shape[-1], dim, dealias)
    D = np.diff(X, axis=0)
    M = 0.5 * (X[1:] + X[:-1])
    F = ac_drift(M, kappa, c, shear, dim, dealias)
    return X, T, D, M, F


def spde_geometric_action(path, kappa, c=0.0, shear="uniform", dim=None, dealias=True,
                          quadrature="trapezoid"):
    """Geometric action of a field path with L^2(torus) norms.

    Same two quadratures as :func:`mlpaths.gmam.geometric_action`; the
    gradient below differentiates the ``"midpoint"`` sum.
    """
    _, T = _resolve(np.asarray(path)[0], shear, dim, dealias)
    if quadrature == "trapezoid":
        X = np.asarray(path, dtype=float)
        n = X.shape[0] - 1
        Xs = np.gradient(X, 1.0 / n, axis=0)
        F = ac_drift(X, kappa, c, shear, T.dim, dealias)
        dens = np.maximum(T.norm(Xs) * T.norm(F) - T.inner(Xs, F), 0.0)
        return float((dens.sum() - 0.5 * (dens[0] + dens[-1])) / n)
    if quadrature != "midpoint":
        raise ValueError(f"unknown quadrature {quadrature!r}")
    X, T, D, M, F = _field_terms(path, kappa, c, shear, T.dim, dealias)
    terms = T.norm(D) * T.norm(F) - T.inner(D, F)
    return float(np.sum(np.maximum(terms, 0.0)))


def adjoint_drift_on_drift(u, kappa, c=0.0, shear="uniform", dim=None):
    """``(df/du)^T f(u)`` written out term by term.

    kappa^2 LapLap u + 2 kappa f' Lap u + kappa f'' |grad u|^2 + f f'
    + kappa g'' u_x + 2 kappa g' u_xy - g^2 u_xx,  with f(u) = u - u^3.
    """
    u, T = _resolve(u, shear, dim, dealias=False)
    fp = 1 - 3 * u**2
    fpp = -6 * u
    out = (kappa**2 * T.biharm(u) + 2 * kappa * fp * T.lap(u)
           + kappa * fpp * T.grad_sq(u) + reaction(u) * fp)
    g, g1, g2 = shear_profile(c, shear, T)
    if np.any(g != 0):
        out = out - g**2 * T.dxx(u)
        if T.dim == 2:
            out = out + kappa * g2 * T.dx(u) + 2 * kappa * g1 * T.dxy(u)
    return out


def spde_gmam_gradient(path, kappa, c=0.0, shear="uniform", dim=None, dealias=True):
    """Path-space gradient of the field geometric action at every node.

    Uses the same segment-midpoint structure in the path parameter as
    :func:`mlpaths.gmam.gmam_gradient`. Without dealiasing the adjoint acting
    on the drift is the expanded expression of :func:`adjoint_drift_on_drift`;
    with it, the projection breaks the chain rule behind that expansion, so
    the adjoint of the projected drift is applied directly. The antisymmetric
    shear part enters through ``-g d/dx``. Endpoint rows are zero.
    """
    _, T = _resolve(np.asarray(path)[0], shear, dim, dealias)
    X, T, D, M, F = _field_terms(path, kappa, c, shear, T.dim, dealias)
    n = X.shape[0] - 1
    nD = T.norm(D)
    nF = T.norm(F)
    bad = np.flatnonzero((nD <= 1e-14) | (nF <= 1e-300))
    if bad.size:
        raise DegenerateNodeError(int(bad[0]), "zero segment or vanishing drift")
    ex = (slice(None),) + (None,) * T.dim
    a = (nF / nD)[ex] * D - F
    if dealias:
        JtF = ac_drift_vjp(M, F, kappa, c, shear, T.dim, True)
    else:
        JtF = adjoint_drift_on_drift(M, kappa, c, shear, T.dim)
    JtD = ac_drift_vjp(M, D, kappa, c, shear, T.dim, dealias)
    cc = (nD / nF)[ex] * JtF - JtD
    G = np.zeros_like(X)
    G[1:] += a + 0.5 * cc
    G[:-1] += -a + 0.5 * cc
    G[0] = 0.0
    G[-1] = 0.0
    return n * G


def spde_gmam_step(X, h, kappa, c, shear, dim, dealias=True):
    """One Strang-split preconditioned descent step for a field path (no reparameterization)."""
    from scipy.linalg import solve_banded

    T = torus(X.shape[-1], dim, dealias)
    n = X.shape[0] - 1
    half = np.exp(-(kappa**2) * T.k2**2 * (0.5 * h))
    Y = X.copy()
    Y[1:-1] = T.inv(half * T.hat(Y[1:-1]))

    ex = (slice(None),) + (None,) * T.dim
    G = spde_gmam_gradient(Y, kappa, c, shear, dim, dealias)
    length = np.sum(T.norm(np.diff(Y, axis=0)))
    lam = T.norm(ac_drift(Y[1:-1], kappa, c, shear, dim, dealias)) / length
    r = (lam * n) ** 2
    D2 = (Y[2:] - 2 * Y[1:-1] + Y[:-2])
    rhs_explicit = -lam[ex] * G[1:-1] + kappa**2 * T.biharm(Y[1:-1]) - r[ex] * D2
    # the last term above is lambda^2 * X'' with X'' = n^2 * D2, folded into r
    rhs = Y[1:-1] + 0.5 * h * r[ex] * D2 + h * rhs_explicit

    m = n - 1
    coef = 0.5 * h * r
    ab = np.zeros((3, m))
    ab[1] = 1 + 2 * coef
    ab[0, 1:] = -coef[:-1]
    ab[2, :-1] = -coef[1:]
    rhs = rhs.reshape(m, -1)
    rhs[0] += coef[0] * Y[0].ravel()
    rhs[-1] += coef[-1] * Y[-1].ravel()
    Z = Y.copy()
    Z[1:-1] = solve_banded((1, 1), ab, rhs).reshape(Y[1:-1].shape)
    Z[1:-1] = T.inv(half * T.hat(Z[1:-1]))
    if not np.all(np.isfinite(Z)):
        raise BlowUpError("field path")
    return Z


# ---------------------------------------------------------------------------
# initial paths

INITIAL_KINDS = ("linear", "horizontal", "double_horizontal", "vertical",
                 "double_vertical", "elliptical", "radial")


def initial_field_path(kind, n, N, dim=2, start=-1.0, end=1.0):
    """Initial field path of ``n+1`` fields from ``u = start`` to ``u = end``.

    Interior fields (1-based ``2 <= j <= n``) follow the nucleation profiles
    ``2 exp(-q(x, y) / (4/9 (j/n)^2)) - 1``; ``linear`` interpolates the two
    constant states. In 1D the ``vertical``/``horizontal`` kinds both nucleate
    along the single coordinate.
    """
    if kind not in INITIAL_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {INITIAL_KINDS}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if N < 8:
        raise ValueError("N must be >= 8")
    T = torus(N, dim)
    shape = (n + 1,) + T.shape
    out = np.empty(shape)
    out[0] = start
    out[-1] = end
    if kind == "linear":
        for k in range(1, n):
            j = k + 1
            out[k] = start * (n + 1 - j) / n + end * (j - 1) / n
        return out

    if dim == 1:
        x = T.x
        y = T.x
    else:
        x, y = T.x, T.y
    if kind in ("vertical", "double_vertical"):
        x, y = y, x
    if kind in ("horizontal", "vertical"):
        q = (0.5 - y) ** 2
    elif kind in ("double_horizontal", "double_vertical"):
        q = (0.5 - 2 * np.mod(y, 0.5)) ** 2
    elif kind == "elliptical":
        if dim != 2:
            raise ValueError("elliptical path needs dim=2")
        q = (y - x / 16 - 15 / 32) ** 2 + (y / 16 + x - 17 / 32) ** 2 / 16
    else:  # radial
        if dim != 2:
            raise ValueError("radial path needs dim=2")
        q = (0.5 - x) ** 2 + (0.5 - y) ** 2
    for k in range(1, n):
        j = k + 1
        out[k] = 2 * np.exp(-q / (4 / 9 * (j / n) ** 2)) - 1
    return out


def field_path_snapshots(path, count=7):
    """Indices of ``count`` fields spread uniformly over the path parameter."""
    n = np.asarray(path).shape[0] - 1
    return np.unique(np.round(np.linspace(0, n, count)).astype(int))
