"""String method and the p-String search for separatrix attractors.

Phase 1 evolves a string between two sinks until its evolution becomes
periodic (or stationary). Phase 2 lets every point of the stored string
flow freely; the point that stays away from both sinks the longest sits
closest to the attractor on the separatrix.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Path, SolverConfig, SystemSpec, as_points, reparameterize_equal_arclength
from .errors import (
    AmbiguousSeparatrixError,
    ConvergenceError,
    OrbitEscapedError,
)
from .gmam import geometric_action


@dataclass
class PeriodicOrbitReport:
    point: np.ndarray
    is_fixed_point: bool
    period: float
    orbit_samples: np.ndarray
    history: list
    meta: dict = field(default_factory=dict)


def string_step(path, system: SystemSpec, h: float, interpolation: str = "linear"):
    """Flow every movable point for one step, then redistribute to equal arclength."""
    pts = as_points(path)
    fixed_start = getattr(path, "fixed_start", True)
    fixed_end = getattr(path, "fixed_end", True)
    lo = 0 if not fixed_start else 1
    hi = pts.shape[0] if not fixed_end else pts.shape[0] - 1
    new = pts.copy()
    new[lo:hi] = system.flow_step(pts[lo:hi], h)
    out = reparameterize_equal_arclength(new, interpolation=interpolation)
    if isinstance(path, Path):
        return path.with_points(out)
    return out


# ---------------------------------------------------------------------------
# periodicity detection


class PathRingBuffer:
    """Bounded store of past strings.

    Every ``k``-th step the string is kept together with its successor, so
    that a match can be refined to a fractional step by interpolating within
    the stored pair. The immediately preceding string is always available.
    """

    def __init__(self, k: int = 10, max_bytes: int = 64 * 2**20):
        self.k = k
        self.max_bytes = max_bytes
        self.pairs = deque()
        self._pending = None
        self.previous = None
        self._capacity = None

    def push(self, step: int, pts):
        pts = np.asarray(pts)
        if self._capacity is None:
            self._capacity = max(2, self.max_bytes // (2 * pts.nbytes))
        if self._pending is not None and self._pending[0] == step - 1:
            self.pairs.append((self._pending[0], self._pending[1], pts))
            if len(self.pairs) > self._capacity:
                self.pairs.popleft()
            self._pending = None
        if step % self.k == 0:
            self._pending = (step, pts)
        self.previous = (step, pts)

    def __len__(self):
        return len(self.pairs)


@dataclass
class PeriodicMatch:
    index: int        # stored step the current string matches
    theta: float      # fractional offset inside the stored pair
    lag: float        # effective lag in steps


def _max_dist(a, b, system):
    return float(np.max(system.norm(a - b)))


def match_periodicity(history, buffer: PathRingBuffer, current, system: SystemSpec,
                      threshold: float, path_tol: Optional[float] = None) -> Optional[PeriodicMatch]:
    """Most recent stored string that the current one repeats, if any."""
    i = len(history) - 1
    if i < 1:
        return None
    S = np.asarray(history, dtype=float)
    Si = S[i]
    if path_tol is None:
        length = float(np.sum(system.norm(np.diff(current, axis=0))))
        path_tol = 100 * threshold * length

    prev = buffer.previous
    if prev is not None and prev[0] == i - 1:
        if abs(Si - S[i - 1]) <= threshold * max(abs(Si), abs(S[i - 1]), 1e-300):
            if _max_dist(current, prev[1], system) < path_tol:
                return PeriodicMatch(i - 1, 0.0, 1.0)

    stride = max(1, current.shape[0] // 64)
    for j0, A, B in reversed(buffer.pairs):
        if j0 + 1 >= i - 1:
            continue
        lo, hi = min(S[j0], S[j0 + 1]), max(S[j0], S[j0 + 1])
        slack = threshold * max(abs(hi), abs(Si), 1e-300)
        if not (lo - slack <= Si <= hi + slack):
            continue
        d = B - A
        dd = float(np.sum(d * d))
        theta = 0.0 if dd == 0 else float(np.clip(np.sum((current - A) * d) / dd, 0.0, 1.0))
        # cheap prefilter on a subsample, then the full comparison
        sub = slice(None, None, stride)
        if _max_dist(current[sub], A[sub] + theta * d[sub], system) > 2 * path_tol:
            continue
        if _max_dist(current, A + theta * d, system) < path_tol:
            return PeriodicMatch(j0, theta, i - (j0 + theta))
    return None


def detect_periodicity(history, paths, threshold: float, system: Optional[SystemSpec] = None,
                       path_tol: Optional[float] = None) -> Optional[int]:
    """Index of an earlier step whose action and string match the latest one.

    ``paths`` is a :class:`PathRingBuffer` holding the current string as its
    ``previous`` entry, or a plain sequence of strings aligned with
    ``history``; ``None`` restricts the test to the action values. The most
    recent match is returned, so a stationary string yields ``i - 1``.
    """
    h = np.asarray(history, dtype=float)
    i = len(h) - 1
    if i < 1:
        return None

    def close(a, b):
        return abs(a - b) <= threshold * max(abs(a), abs(b), 1e-300)

    if paths is None:
        for j in range(i - 1, -1, -1):
            if close(h[i], h[j]):
                return j
        return None

    if isinstance(paths, PathRingBuffer):
        current = paths.previous[1]
        inner = PathRingBuffer(paths.k, paths.max_bytes)
        inner.pairs = deque(p for p in paths.pairs if p[0] + 1 < i)
        inner.previous = None
        m = match_periodicity(h, inner, current, system or _euclid(current), threshold, path_tol)
        return None if m is None else m.index

    seq = [np.asarray(p, dtype=float) for p in paths]
    if len(seq) != len(h):
        raise ValueError("paths and history must have the same length")
    current = seq[-1]
    sys_ = system or _euclid(current)
    if path_tol is None:
        path_tol = 100 * threshold * float(np.sum(sys_.norm(np.diff(current, axis=0))))
    for j in range(i - 1, -1, -1):
        if close(h[i], h[j]) and _max_dist(current, seq[j], sys_) < path_tol:
            return j
    return None


def _euclid(pts):
    return SystemSpec(name="euclid", dim=np.shape(pts)[-1], drift=lambda x: np.zeros_like(x))


# ---------------------------------------------------------------------------
# the p-String run


def _sink_distance(pts, x_a, x_b, system):
    return np.minimum(system.norm(pts - x_a), system.norm(pts - x_b))


def pstring_run(system: SystemSpec, x_a, x_b, initial, config: SolverConfig,
                buffer_k: int = 10, orbit_samples: int = 200) -> PeriodicOrbitReport:
    """Locate the attractor on the separatrix crossed by a string from ``x_a`` to ``x_b``."""
    x_a = np.asarray(x_a, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    h = config.h
    X = reparameterize_equal_arclength(np.array(as_points(initial), dtype=float))
    if not (np.allclose(X[0], x_a) and np.allclose(X[-1], x_b)):
        raise ValueError("initial path must start at x_a and end at x_b")
    buf = PathRingBuffer(buffer_k)
    history = [geometric_action(X, system, "midpoint")]
    buf.push(0, X)
    match = None
    for step in range(1, config.max_steps + 1):
        X = string_step(X, system, h, config.interpolation)
        history.append(geometric_action(X, system, "midpoint"))
        match = match_periodicity(history, buf, X, system, config.threshold)
        buf.push(step, X)
        if match is not None:
            break
    else:
        raise ConvergenceError(f"string evolution not periodic within {config.max_steps} steps",
                               history, X)
    f_step = len(history) - 1
    phi_f = X.copy()
    is_fixed = match.lag < 1.5
    period = 0.0 if is_fixed else match.lag * h

    # phase 2: free flow without reparameterization
    Y = phi_f.copy()
    survivors = np.flatnonzero(_sink_distance(Y, x_a, x_b, system) > h)
    prev = survivors
    steps2 = 0
    cap = config.max_steps
    while survivors.size > 1:
        if steps2 >= cap:
            raise ConvergenceError(
                f"separatrix point not isolated after {cap} free-flow steps "
                f"({survivors.size} survivors)", history, phi_f)
        Y = system.flow_step(Y, h)
        steps2 += 1
        prev = survivors
        survivors = np.flatnonzero(_sink_distance(Y, x_a, x_b, system) > h)
    if survivors.size == 0:
        raise AmbiguousSeparatrixError(prev)
    j_star = int(survivors[0])
    point = phi_f[j_star].copy()
    samples = np.empty((0, system.dim))
    if not is_fixed:
        samples = recover_orbit(point, period, system, orbit_samples, h)
    meta = {"f": f_step, "match_index": match.index, "match_theta": match.theta,
            "lag": match.lag, "j_star": j_star, "phase2_steps": steps2,
            "string": phi_f}
    return PeriodicOrbitReport(point=point, is_fixed_point=is_fixed, period=period,
                               orbit_samples=samples, history=history, meta=meta)


def recover_orbit(point, period: float, system: SystemSpec, samples: int = 200, h: float = 0.01):
    """``samples`` states spread over one period, integrated at step ``h / 10``."""
    if not period > 0:
        raise ValueError("period must be positive (fixed points have no orbit)")
    x = np.asarray(point, dtype=float)
    radius = 10 * max(float(system.norm(x)), 1.0)
    dt = h / 10
    nsteps = max(samples, int(np.ceil(period / dt)))
    dt = period / nsteps
    keep = set(np.round(np.linspace(0, nsteps, samples, endpoint=False)).astype(int))
    out = []
    for k in range(nsteps):
        if k in keep:
            out.append(x.copy())
        x = system.flow_step(x, dt)
        if system.norm(x) > radius:
            raise OrbitEscapedError((k + 1) * dt)
    return np.array(out)


def first_return_time(point, system: SystemSpec, h: float = 1e-3, tol: float = 1e-3,
                      t_max: float = 1e3) -> float:
    """Time for the flow from ``point`` to come back within ``tol``; the closest approach is refined by a parabola."""
    x0 = np.asarray(point, dtype=float)
    x = x0.copy()
    left = False
    d_hist = deque(maxlen=3)
    t = 0.0
    while t < t_max:
        x = system.flow_step(x, h)
        t += h
        d = float(system.norm(x - x0))
        d_hist.append((t, d))
        if d > 2 * tol:
            left = True
        if left and len(d_hist) == 3 and d_hist[1][1] < tol and d_hist[1][1] <= d_hist[0][1] \
                and d_hist[1][1] <= d_hist[2][1]:
            (t0, a), (t1, b), (t2, c) = d_hist
            den = a - 2 * b + c
            return t1 + (0.5 * h * (a - c) / den if den > 0 else 0.0)
    raise OrbitEscapedError(t)
