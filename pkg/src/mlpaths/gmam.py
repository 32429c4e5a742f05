"""Geometric action and its minimization by preconditioned descent (gMAM).

Two quadratures of ``int |X'||f| - <X', f> ds`` are provided. The reported
value (``"trapezoid"``) samples the integrand at the nodes, with ``X'`` from
central differences (one-sided at the ends), and sums by the trapezoid rule.
The descent itself works on the segment form

    S = sum_j |D_j| |F_j| - <D_j, F_j>,   D_j = X_{j+1} - X_j,  F_j = f((X_j + X_{j+1}) / 2)

(``"midpoint"``), whose exact gradient is cheap: :func:`gmam_gradient`
returns it scaled by ``n`` so that it approximates the functional derivative
``-lambda X'' + (J - J^T) X' + J^T f / lambda - lambda' X'``. Both agree to
``O(1/n^2)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .core import Path, SolverConfig, SystemSpec, as_points, reparameterize_equal_arclength
from .errors import BlowUpError, ConvergenceError, DegenerateNodeError


@dataclass
class ActionReport:
    """Result of an action minimization."""

    action: float
    path: Path
    iterations: int
    history: list
    crossing_index: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def points(self):
        return self.path.points


def _segment_terms(pts, system: SystemSpec):
    D = np.diff(pts, axis=0)
    M = 0.5 * (pts[1:] + pts[:-1])
    F = system.f(M)
    return D, M, F


def geometric_action(path, system: SystemSpec, quadrature: str = "trapezoid") -> float:
    """Discrete geometric action (nonnegative).

    ``quadrature`` is ``"trapezoid"`` (nodal, the reported value) or
    ``"midpoint"`` (the segment sum minimized by :func:`gmam_minimize`).
    """
    pts = as_points(path)
    if quadrature == "midpoint":
        D, _, F = _segment_terms(pts, system)
        terms = system.norm(D) * system.norm(F) - system.inner(D, F)
        return float(np.sum(np.maximum(terms, 0.0)))
    if quadrature != "trapezoid":
        raise ValueError(f"unknown quadrature {quadrature!r}")
    n = pts.shape[0] - 1
    if n < 1:
        return 0.0
    Xs = np.gradient(pts, 1.0 / n, axis=0)
    F = system.f(pts)
    dens = np.maximum(system.norm(Xs) * system.norm(F) - system.inner(Xs, F), 0.0)
    return float((dens.sum() - 0.5 * (dens[0] + dens[-1])) / n)


def segment_action_density(path, system: SystemSpec):
    """Per-segment contributions to :func:`geometric_action`."""
    pts = as_points(path)
    D, _, F = _segment_terms(pts, system)
    return np.maximum(system.norm(D) * system.norm(F) - system.inner(D, F), 0.0)


def gmam_gradient(path, system: SystemSpec):
    """Gradient of the discrete geometric action at every node (endpoint rows zero).

    The returned field ``G`` satisfies ``dS = (1/n) sum_k <G_k, dX_k>`` in the
    system inner product, i.e. ``G`` is the L^2([0, 1]) functional derivative.
    """
    pts = as_points(path)
    n = pts.shape[0] - 1
    D, M, F = _segment_terms(pts, system)
    nD = system.norm(D)
    nF = system.norm(F)
    scale = max(float(np.max(nD)), 1e-300)
    bad = np.flatnonzero((nD <= 1e-14 * scale) | (nF <= 1e-14))
    if bad.size:
        j = int(bad[0])
        why = "zero-length segment" if nD[j] <= 1e-14 * scale else "vanishing drift"
        raise DegenerateNodeError(j, why)
    a = (nF / nD)[:, None] * D - F
    if system.vjp is None:
        J = system.jac(M)
        JtF = np.einsum("...ij,...i->...j", J, F)
        JtD = np.einsum("...ij,...i->...j", J, D)
    else:
        JtF = system.jac_t(M, F)
        JtD = system.jac_t(M, D)
    c = (nD / nF)[:, None] * JtF - JtD
    G = np.zeros_like(pts)
    G[1:] += a + 0.5 * c
    G[:-1] += -a + 0.5 * c
    G[0] = 0.0
    G[-1] = 0.0
    return n * G


def _tridiag(coef, m):
    ab = np.zeros((3, m))
    ab[1] = 1 + 2 * coef
    ab[0, 1:] = -coef[:-1]
    ab[2, :-1] = -coef[1:]
    return ab


def gmam_step(pts, system: SystemSpec, h: float):
    """One semi-implicit descent step ``X_t = -lambda G`` (not reparameterized).

    The diffusion-like part ``lambda^2 X''`` is moved to the left-hand side
    and solved by backward Euler; the rest of ``-lambda G`` stays explicit.
    """
    n = pts.shape[0] - 1
    G = gmam_gradient(pts, system)
    length = float(np.sum(system.norm(np.diff(pts, axis=0))))
    lam = system.norm(system.f(pts[1:-1])) / length
    r = (lam * n) ** 2
    D2 = pts[2:] - 2 * pts[1:-1] + pts[:-2]
    rhs = pts[1:-1] + h * (-lam[:, None] * G[1:-1] - r[:, None] * D2)
    coef = h * r
    rhs[0] += coef[0] * pts[0]
    rhs[-1] += coef[-1] * pts[-1]
    out = pts.copy()
    out[1:-1] = solve_banded((1, 1), _tridiag(coef, n - 1), rhs)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("path")
    return out


def nearest_node(path, x) -> int:
    pts = as_points(path)
    return int(np.argmin(np.linalg.norm(pts - np.asarray(x, dtype=float), axis=1)))


def slowest_node(path, system: SystemSpec) -> int:
    """Interior node with the smallest drift magnitude (a proxy for the separatrix crossing)."""
    pts = as_points(path)
    return 1 + int(np.argmin(system.norm(system.f(pts[1:-1]))))


def descend(initial, config: SolverConfig, step: Callable, action: Callable,
            callback=None, max_halvings: int = 5, window: int = 10, burn_in: int = 50):
    """Generic descent loop shared by the ODE and field minimizers.

    After ``burn_in`` accepted steps, a step that raises the action is
    retried with the step size halved, up to ``max_halvings`` times; the next
    step starts again from the configured size. Convergence is declared
    when the relative action change per unit of fictitious time, averaged
    over ``window`` steps, drops below ``config.threshold``; actions smaller
    than ``threshold * S0`` are compared in absolute terms. Returns ``(best_points, history, iterations, meta)``.
    """
    X = reparameterize_equal_arclength(np.array(as_points(initial), dtype=float))
    S = action(X)
    S0 = S
    history = [S]
    best, best_S = X, S
    halvings = 0
    converged = False
    it = 0
    while it < config.max_steps:
        h = config.h
        for k in range(max_halvings + 1):
            Xn = reparameterize_equal_arclength(step(X, h), exact_chords=False)
            Sn = action(Xn)
            if not np.isfinite(Sn):
                raise BlowUpError("action")
            if it < burn_in or Sn <= S * (1 + 1e-10) or k == max_halvings:
                break
            h *= 0.5
            halvings += 1
        it += 1
        X, S = Xn, Sn
        history.append(S)
        if S < best_S:
            best, best_S = X, S
        if callback is not None:
            callback(it, X, S)
        if S > 10 * S0 and S0 > 0:
            raise ConvergenceError(f"divergence: action grew from {S0:.4g} to {S:.4g}",
                                   history, best)
        if len(history) > window:
            recent = np.asarray(history[-window - 1:])
            # changes below threshold * S0 are treated as absolute, so paths whose
            # action decays to zero (pure downhill pieces) still terminate
            floor = max(config.threshold * abs(S0), 1e-300)
            rel = np.abs(np.diff(recent)) / np.maximum(np.abs(recent[1:]), floor)
            if rel.mean() < config.threshold * config.h:
                converged = True
                break
    meta = {"halvings": halvings, "converged": converged}
    return best, history, it, meta


def gmam_minimize(system: SystemSpec, initial, config: SolverConfig, crossing=None,
                  callback=None, require_convergence: bool = False) -> ActionReport:
    """Minimize the geometric action between the fixed endpoints of ``initial``.

    ``crossing`` may be a state (the crossing index is then the nearest node)
    or ``"slowest"`` for the node with the smallest drift. Field systems
    (``meta['kind'] == 'spde'``) use the split spectral step.
    """
    t0 = time.perf_counter()
    if system.meta.get("kind") == "spde":
        from .spde import spde_gmam_step

        T_shape = system.meta["grid"]
        p = system.params
        dim = system.meta["space_dim"]

        def step(X, h):
            F = spde_gmam_step(X.reshape((-1,) + T_shape), h, p["kappa"], p["c"],
                               system.meta["shear"], dim, p["dealias"])
            return F.reshape(X.shape)
    else:
        def step(X, h):
            return gmam_step(X, system, h)

    pts0 = as_points(initial)
    if pts0.shape[1] != system.dim:
        raise ValueError(f"path dimension {pts0.shape[1]} does not match system ({system.dim})")
    best, history, it, meta = descend(pts0, config, step,
                                      lambda X: geometric_action(X, system, "midpoint"), callback)
    if require_convergence and not meta["converged"]:
        raise ConvergenceError(f"no convergence within {config.max_steps} steps", history, best)
    ci = None
    if crossing is not None:
        ci = slowest_node(best, system) if isinstance(crossing, str) else nearest_node(best, crossing)
    meta["elapsed"] = time.perf_counter() - t0
    meta["action_midpoint"] = history[int(np.argmin(history))]
    return ActionReport(action=geometric_action(best, system), path=Path(best),
                        iterations=it, history=history, crossing_index=ci, meta=meta)
