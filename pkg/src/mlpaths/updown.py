"""Up-down gMAM: minimize uphill to a known separatrix point, then follow the flow down.

The uphill half is a gMAM solve from ``x_a`` to ``x_s``. A coarse gMAM solve
from ``x_s`` to ``x_b`` supplies a point ``x+`` just past the separatrix,
from which the downhill half is produced by integrating the drift. The composite
action is the sum of the two block actions; differences are never taken
across the junction ``x_s -> x+``, which stands for a zero-cost flow
connection along the unstable manifold of the crossing point. The cost
the straight chord would add is reported as ``meta['junction']``.
"""

from __future__ import annotations

import numpy as np

from .core import Path, SolverConfig, SystemSpec, linear_path
from .errors import BadCrossingPointError, NotInBasinError
from .gmam import ActionReport, gmam_minimize, geometric_action


def _integrate(system, x, dt, x_b, x_a=None, max_steps=10**6):
    x = np.asarray(x, dtype=float)
    traj = [x]
    for k in range(max_steps):
        if system.norm(x - x_b) <= dt:
            return np.array(traj), "b"
        if x_a is not None and system.norm(x - x_a) <= dt:
            return np.array(traj), "a"
        x = system.flow_step(x, dt)
        traj.append(x)
    raise NotInBasinError(max_steps)


def downhill_trajectory(system: SystemSpec, x_plus, dt: float, x_b, max_steps: int = 10**6):
    """Forward trajectory from ``x_plus`` sampled every ``dt``, stopped once within ``dt`` of ``x_b``.

    The first row is ``x_plus``; an empty array is returned if ``x_plus`` is
    already within ``dt`` of ``x_b``.
    """
    x_plus = np.asarray(x_plus, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    if system.norm(x_plus - x_b) <= dt:
        return np.empty((0, x_plus.shape[-1]))
    traj, _ = _integrate(system, x_plus, dt, x_b, max_steps=max_steps)
    return traj


def updown_gmam(system: SystemSpec, x_a, x_s, x_b, n1: int, n2: int, delta: int = 1,
                config: SolverConfig | None = None, initial_up=None, config_down=None,
                max_steps_down: int = 10**6, max_steps_coarse: int = 1000) -> ActionReport:
    """Composite minimum action path from ``x_a`` through ``x_s`` to ``x_b``.

    The coarse downhill solve only has to supply ``x+``; its action tends to
    zero, where a relative stopping rule never fires, so it is capped at
    ``max_steps_coarse`` steps.
    """
    config = config or SolverConfig()
    config_down = config_down or config
    if delta < 1:
        raise ValueError("delta must be a positive integer")
    x_a, x_s, x_b = (np.asarray(v, dtype=float).reshape(system.dim) for v in (x_a, x_s, x_b))
    h = config.h

    up0 = linear_path(x_a, x_s, n1) if initial_up is None else initial_up
    up = gmam_minimize(system, up0, SolverConfig(n=n1, h=h, threshold=config.threshold,
                                                 max_steps=config.max_steps, seed=config.seed))
    coarse = gmam_minimize(system, linear_path(x_s, x_b, n2),
                           SolverConfig(n=n2, h=config_down.h, threshold=config_down.threshold,
                                        max_steps=min(config_down.max_steps, max_steps_coarse),
                                        seed=config.seed))
    cp = coarse.path.points

    # x+: second node of the coarse path; if that one flows back uphill, the
    # first node farther than h from x_s. Both failing means x_s is not on
    # the separatrix.
    candidates = [1] + [k for k in range(1, cp.shape[0] - 1) if system.norm(cp[k] - x_s) > h][:1]
    candidates = list(dict.fromkeys(candidates))
    traj = None
    rejected = []
    for k in candidates:
        t, which = _integrate(system, cp[k], h, x_b, x_a, max_steps_down)
        if which == "b":
            traj, k_plus = t, k
            break
        rejected.append(k)
    if traj is None:
        raise BadCrossingPointError(
            f"coarse downhill nodes {rejected} flow back to x_a")

    down = traj[::delta]
    if system.norm(down[-1] - x_b) > 0:
        down = np.vstack([down, x_b])
    full = np.vstack([up.path.points, down])
    action_down = geometric_action(down, system) if down.shape[0] > 1 else 0.0
    action = up.action + action_down
    meta = {
        "action_up": up.action,
        "action_down": action_down,
        "junction": geometric_action(np.vstack([x_s, down[0]]), system),
        "action_chord": geometric_action(full, system),
        "n2_effective": down.shape[0] - 1,
        "x_plus": cp[k_plus].copy(),
        "x_plus_index": k_plus,
        "steps_up": up.iterations,
        "steps_down": coarse.iterations,
        "coarse_action": coarse.action,
        "coarse_spacing": float(np.max(system.norm(np.diff(cp, axis=0)))),
        "converged_up": up.meta["converged"],
    }
    return ActionReport(action=action, path=Path(full), iterations=up.iterations + coarse.iterations,
                        history=up.history, crossing_index=n1, meta=meta)
