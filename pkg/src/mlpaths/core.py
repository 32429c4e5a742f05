"""Paths, drift fields and the pieces every solver shares.

A path is an ``(n+1, d)`` array of states. All quadratures are written per
segment: the velocity of segment ``j`` is the first difference
``X[j+1] - X[j]`` and the drift is sampled at the segment midpoint. This is
the midpoint rule with a central difference at the half node, so the
parameter grid spacing cancels out of the geometric action and
``fw_action >= geometric_action`` holds exactly for any discrete time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    BlowUpError,
    CollapsedPathError,
    FixedPointTouchError,
)

Array = np.ndarray


@dataclass(frozen=True)
class Path:
    """Ordered sequence of ``n+1`` states with (by default) pinned endpoints."""

    points: Array
    fixed_start: bool = True
    fixed_end: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError(f"path points must be 2-D, got shape {pts.shape}")
        if pts.shape[0] < 3:
            raise ValueError(f"path needs at least 3 points, got {pts.shape[0]}")
        if pts.shape[1] < 1:
            raise ValueError("path states must have dimension >= 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        """Number of segments."""
        return self.points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)

    def with_points(self, points) -> "Path":
        return Path(points, self.fixed_start, self.fixed_end)


def as_points(path) -> Array:
    """Float ``(n+1, d)`` view of a Path or array-like."""
    if isinstance(path, Path):
        return path.points
    pts = np.asarray(path, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _finite_difference_jacobian(drift, x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    eps = 1e-6 * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
    jac = np.empty(x.shape + (d,))
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        jac[..., :, k] = (drift(x + eps * e) - drift(x - eps * e)) / (2 * eps)
    return jac


@dataclass(frozen=True)
class Decomposition:
    """Orthogonal splitting ``f = -gradV + b``."""

    V: Callable[[Array], Array]
    gradV: Callable[[Array], Array]
    b: Callable[[Array], Array]


@dataclass(frozen=True)
class SystemSpec:
    """A deterministic drift field ``x' = f(x)`` on R^dim.

    ``drift`` (and the optional ``jacobian``/``vjp``/``stepper``) act on arrays
    of shape ``(..., dim)``. ``inner_weight`` scales the Euclidean inner
    product; discretized fields use ``1/N`` so that norms are L^2 norms on
    the unit torus.
    """

    name: str
    dim: int
    drift: Callable[[Array], Array]
    sinks: tuple = ()
    jacobian: Optional[Callable[[Array], Array]] = None
    vjp: Optional[Callable[[Array, Array], Array]] = None
    decomposition: Optional[Decomposition] = None
    inner_weight: float = 1.0
    stepper: Optional[Callable[[Array, float], Array]] = None
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        sinks = tuple(np.asarray(s, dtype=float).reshape(self.dim) for s in self.sinks)
        object.__setattr__(self, "sinks", sinks)

    # evaluation -------------------------------------------------------------
    def f(self, x) -> Array:
        return self.drift(np.asarray(x, dtype=float))

    def jac(self, x) -> Array:
        if self.jacobian is not None:
            return self.jacobian(np.asarray(x, dtype=float))
        return _finite_difference_jacobian(self.drift, x)

    def jac_t(self, x, w) -> Array:
        """Apply the adjoint Jacobian ``(df/dx)^T w`` (w.r.t. the weighted inner product)."""
        if self.vjp is not None:
            return self.vjp(np.asarray(x, dtype=float), np.asarray(w, dtype=float))
        J = self.jac(x)
        return np.einsum("...ij,...i->...j", J, w)

    # geometry ----------------------------------------------------------------
    def inner(self, a, b) -> Array:
        return self.inner_weight * np.sum(np.asarray(a) * np.asarray(b), axis=-1)

    def norm(self, a) -> Array:
        return np.sqrt(self.inner_weight) * np.linalg.norm(a, axis=-1)

    # time stepping -------------------------------------------------------------
    def flow_step(self, x, h: float) -> Array:
        """One step of ``x' = f(x)``; explicit midpoint unless the system supplies a stepper."""
        x = np.asarray(x, dtype=float)
        if self.stepper is not None:
            out = self.stepper(x, h)
        else:
            k1 = self.drift(x)
            out = x + h * self.drift(x + 0.5 * h * k1)
        if not np.all(np.isfinite(out)):
            raise BlowUpError("state")
        return out


@dataclass
class SolverConfig:
    """Knobs shared by the path solvers."""

    n: int = 100
    h: float = 0.01
    threshold: float = 1e-6
    max_steps: int = 200_000
    seed: int = 0
    n2: Optional[int] = None
    interpolation: str = "linear"

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.interpolation not in ("linear", "cubic"):
            raise ValueError("interpolation must be 'linear' or 'cubic'")


# ---------------------------------------------------------------------------
# reparameterization


def _chords(pts: Array) -> Array:
    return np.linalg.norm(np.diff(pts, axis=0), axis=1)


def _polyline_eval(pts: Array, cum: Array, s: Array) -> Array:
    """Points at arclength positions ``s`` on the polyline with cumulative lengths ``cum``."""
    nseg = pts.shape[0] - 1
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, nseg - 1)
    seg = cum[idx + 1] - cum[idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(seg > 0, (s - cum[idx]) / seg, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return pts[idx] + t[:, None] * (pts[idx + 1] - pts[idx])


def reparameterize_equal_arclength(path, exact_chords: bool = True, tol: float = 1e-13,
                                   max_iter: int = 200, interpolation: str = "linear") -> Path | Array:
    """Redistribute the points of a path to equal spacing.

    Points are placed by interpolation in cumulative chord length, piecewise
    linear by default or with a cubic spline (``interpolation="cubic"``),
    which cuts far less off curved strings. With ``exact_chords`` the
    positions are then refined, still on the same curve, until the chords
    of the *new* polyline are equal; that makes the operation idempotent.
    Returns the same type it was given.
    """
    pts = as_points(path)
    chords = _chords(pts)
    cum = np.concatenate(([0.0], np.cumsum(chords)))
    total = cum[-1]
    if not np.isfinite(total):
        raise BlowUpError("path")
    if total < 1e-14:
        raise CollapsedPathError(total)
    n = pts.shape[0] - 1
    if interpolation == "cubic" and n >= 3 and np.all(chords > 0):
        curve = CubicSpline(cum, pts, axis=0)
    elif interpolation in ("linear", "cubic"):
        def curve(s):
            return _polyline_eval(pts, cum, s)
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")

    sigma = total * np.arange(n + 1) / n
    new = curve(sigma)
    new[0], new[-1] = pts[0], pts[-1]

    if exact_chords and n > 1:
        best, best_spread = new, np.inf
        for _ in range(max_iter):
            c = _chords(new)
            cbar = c.mean()
            spread = (c.max() - c.min()) / cbar
            if spread < best_spread:
                best, best_spread = new, spread
            if spread <= tol or np.any(c <= 0):
                break
            ds = np.diff(sigma) * (cbar / c)
            sigma = np.concatenate(([0.0], np.cumsum(ds * (total / ds.sum()))))
            sigma[-1] = total
            new = curve(sigma)
            new[0], new[-1] = pts[0], pts[-1]
        new = best

    if isinstance(path, Path):
        return path.with_points(new)
    return new


# ---------------------------------------------------------------------------
# actions


def segment_midpoints(pts: Array) -> Array:
    return 0.5 * (pts[1:] + pts[:-1])


def fw_action(path, times: Sequence[float], system: SystemSpec) -> float:
    """Freidlin-Wentzell action ``1/2 int |X' - f(X)|^2 dt`` on a discrete time grid."""
    pts = as_points(path)
    t = np.asarray(times, dtype=float)
    if t.shape != (pts.shape[0],):
        raise ValueError(f"times has shape {t.shape}, expected ({pts.shape[0]},)")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValueError("times must be strictly increasing")
    vel = np.diff(pts, axis=0) / dt[:, None]
    F = system.f(segment_midpoints(pts))
    r = vel - F
    return float(0.5 * np.sum(system.inner(r, r) * dt))


def reconstruct_time_parameterization(path, system: SystemSpec):
    """Physical times making ``|dX/dt| = |f|`` on every segment.

    With these times the FW action equals the geometric action of the path.
    Returns ``(path, times)`` with ``times[0] = 0``.
    """
    pts = as_points(path)
    fn = system.norm(system.f(pts[1:-1]))
    bad = np.flatnonzero(fn <= 1e-12)
    if bad.size:
        raise FixedPointTouchError(int(bad[0]) + 1)
    Fm = system.norm(system.f(segment_midpoints(pts)))
    bad = np.flatnonzero(Fm <= 1e-12)
    if bad.size:
        raise FixedPointTouchError(int(bad[0]))
    dt = system.norm(np.diff(pts, axis=0)) / Fm
    times = np.concatenate(([0.0], np.cumsum(dt)))
    return path, times


def linear_path(a, b, n: int) -> Array:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    out = (1 - t) * a + t * b
    out[0], out[-1] = a, b
    return out


def random_path(a, b, n: int, seed: int = 0, amplitude: float = 0.1) -> Array:
    """Straight line from ``a`` to ``b`` with uniform random jitter on interior points."""
    rng = np.random.default_rng(seed)
    out = linear_path(a, b, n)
    out[1:-1] += amplitude * rng.uniform(-1.0, 1.0, size=out[1:-1].shape)
    return out
