"""Command-line front end.

Every subcommand resolves its settings from defaults, then an optional
YAML ``--config`` file, then explicit flags, and writes the resolved
settings into its outputs. Exit status: 0 success, 1 usage error, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FsPath

import numpy as np

from . import io as mio
from .core import SolverConfig, linear_path, random_path, reconstruct_time_parameterization, fw_action
from .errors import NumericalError
from .gmam import gmam_minimize, geometric_action
from .oracle import exact_action_catalog
from .pstring import pstring_run
from .spde import initial_field_path, field_path_snapshots
from .systems import get_system
from .updown import updown_gmam

log = logging.getLogger("mlpaths")

DEFAULTS = {
    "system": "sde2d",
    "params": {},
    "n": 100,
    "h": 0.01,
    "threshold": 1e-6,
    "max_steps": 200_000,
    "seed": 0,
    "initial": "linear",
    "interpolation": "linear",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers


def _parse_params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _scalar(v.strip())
    return out


def _scalar(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


def _vector(text):
    return np.array([float(v) for v in str(text).replace(" ", "").split(",") if v], dtype=float)


def resolve_config(args, extra_keys=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        try:
            cfg.update(mio.load_config(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    params = dict(cfg.get("params") or {})
    params.update(_parse_params(getattr(args, "param", None)))
    cfg["params"] = params
    for key in ("system", "n", "h", "threshold", "max_steps", "seed", "initial",
                "interpolation") + tuple(extra_keys):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def solver_config(cfg, n=None) -> SolverConfig:
    try:
        return SolverConfig(n=int(n or cfg["n"]), h=float(cfg["h"]), threshold=float(cfg["threshold"]),
                            max_steps=int(cfg["max_steps"]), seed=int(cfg["seed"]),
                            interpolation=str(cfg.get("interpolation", "linear")))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def make_system(cfg):
    try:
        return get_system(cfg["system"], **cfg.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def make_initial(system, kind, n, seed=0, x_a=None, x_b=None):
    """Initial path between the two sinks (or given endpoints)."""
    x_a = system.sinks[0] if x_a is None else np.asarray(x_a, dtype=float)
    x_b = system.sinks[1] if x_b is None else np.asarray(x_b, dtype=float)
    if system.meta.get("kind") == "spde":
        if kind == "random":
            raise UsageError("random initial paths are for finite-dimensional systems")
        grid = system.meta["grid"]
        X = initial_field_path(kind, n, grid[0], dim=system.meta["space_dim"])
        X = X.reshape(n + 1, -1)
        X[0], X[-1] = x_a, x_b
        return X
    if kind == "linear":
        return linear_path(x_a, x_b, n)
    if kind == "random":
        return random_path(x_a, x_b, n, seed=seed)
    raise UsageError(f"unknown initial path kind {kind!r}")


def _write(obj, out):
    text = mio.dumps_json(obj)
    if out:
        FsPath(out).write_text(text)
    else:
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_pstring(args):
    cfg = resolve_config(args)
    system = make_system(cfg)
    sc = solver_config(cfg)
    X0 = make_initial(system, cfg["initial"], sc.n, sc.seed)
    rep = pstring_run(system, X0[0], X0[-1], X0, sc)
    meta = {k: v for k, v in rep.meta.items() if k != "string"}
    _write({"config": cfg, "point": rep.point, "is_fixed_point": rep.is_fixed_point,
            "period": rep.period, "orbit_samples": rep.orbit_samples, "history": rep.history,
            "meta": meta, "string": rep.meta["string"]}, args.out)
    return 0


def cmd_gmam(args):
    cfg = resolve_config(args, ("snapshots",))
    system = make_system(cfg)
    sc = solver_config(cfg)
    X0 = make_initial(system, cfg["initial"], sc.n, sc.seed)
    rep = gmam_minimize(system, X0, sc, crossing="slowest")
    _emit_action_report(rep, system, cfg, args)
    return 0


def _emit_action_report(rep, system, cfg, args):
    extra = {"iterations": rep.iterations, "history": rep.history,
             "crossing_index": rep.crossing_index,
             # wall-clock time would break bit-identical reruns
             "meta": {k: v for k, v in rep.meta.items() if k != "elapsed"}}
    snaps = cfg.get("snapshots")
    if snaps:
        extra["snapshot_indices"] = field_path_snapshots(rep.path.points, int(snaps))
    _write(mio.path_envelope(rep.path.points, cfg["system"], cfg, rep.action, **extra), args.out)
    if getattr(args, "history_csv", None):
        mio.write_table_csv([{"iteration": i, "action": s} for i, s in enumerate(rep.history)],
                            args.history_csv, ["iteration", "action"], config=cfg)
    if getattr(args, "path_csv", None):
        mio.write_path_csv(rep.path.points, args.path_csv, config=cfg)


def cmd_updown(args):
    cfg = resolve_config(args, ("n1", "n2", "delta", "xs", "xs_from", "snapshots"))
    system = make_system(cfg)
    if cfg.get("xs_from"):
        try:
            x_s = np.asarray(mio.read_json(cfg["xs_from"])["point"], dtype=float)
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot read crossing point: {exc}") from None
    elif cfg.get("xs") is not None:
        x_s = _vector(cfg["xs"]) if isinstance(cfg["xs"], str) else np.asarray(cfg["xs"], dtype=float)
    else:
        raise UsageError("updown needs --xs or --xs-from")
    if x_s.size != system.dim:
        raise UsageError(f"crossing point has {x_s.size} entries, system dimension is {system.dim}")
    sc = solver_config(cfg)
    n1 = int(cfg.get("n1") or 100)
    n2 = int(cfg.get("n2") or 10)
    rep = updown_gmam(system, system.sinks[0], x_s, system.sinks[1], n1, n2,
                      int(cfg.get("delta") or 1), sc)
    _emit_action_report(rep, system, cfg, args)
    return 0


def cmd_action(args):
    cfg = resolve_config(args, ("path",))
    system = make_system(cfg)
    src = cfg.get("path")
    if not src:
        raise UsageError("action needs --path")
    try:
        if str(src).endswith(".json"):
            pts = mio.envelope_points(mio.read_json(src))
        else:
            pts = mio.read_path_csv(src)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read path: {exc}") from None
    if pts.shape[1] != system.dim:
        raise UsageError(f"path dimension {pts.shape[1]} does not match system ({system.dim})")
    S = geometric_action(pts, system)
    out = {"config": cfg, "geometric_action": S}
    try:
        _, t = reconstruct_time_parameterization(pts, system)
        out["fw_action"] = fw_action(pts, t, system)
        out["duration"] = float(t[-1])
    except NumericalError as exc:
        out["fw_action"] = None
        out["note"] = str(exc)
    _write(out, args.out)
    return 0


def cmd_oracle(args):
    rows = exact_action_catalog()
    if args.out:
        mio.write_table_csv(rows, args.out, ["system", "crossing", "action"])
    else:
        print("system,crossing,action")
        for r in rows:
            print(f"{r['system']},{r['crossing']},{r['action']!r}")
    return 0


# ---------------------------------------------------------------------------
# Table 1 harness

TABLE1_REFERENCE = {
    "2d": {"updown": 0.50008, "gmam": 0.49987, "truth": 0.5},
    "rot": {"updown": 0.50031, "gmam": 0.50448, "truth": 0.5},
    "nonrot": {"updown": 0.85490, "gmam": 0.86163, "truth": 5 / 6},
    "nonrot_fine": {"updown": 0.84123, "gmam": 0.84545, "truth": 5 / 6},
    "ac1d": {"updown": 0.37873, "gmam": 0.39827, "truth": 0.3732},
}

# acceptance windows (lo, hi); None means unbounded on that side
TABLE1_TOL = {
    ("2d", "updown"): (0.4996, 0.5006), ("2d", "gmam"): (0.4994, 0.5006),
    ("rot", "updown"): (0.4995, 0.5010), ("rot", "gmam"): (None, 0.506),
    ("nonrot", "updown"): (None, 0.856), ("nonrot", "gmam"): (None, 0.863),
    ("nonrot_fine", "updown"): (None, 0.8425), ("nonrot_fine", "gmam"): (None, None),
    ("ac1d", "updown"): (0.374, 0.381), ("ac1d", "gmam"): (None, 0.40),
}

TABLE1_COLUMNS = {
    "2d": dict(system="sde2d", params={}, pstring=dict(n=30, h=0.01, threshold=1e-6, initial="linear"),
               updown=dict(n1=100, n2=10, delta=1, h=0.1, threshold=1e-6, max_steps=20000),
               gmam=dict(n=100, h=0.1, threshold=1e-6, initial="linear", max_steps=20000)),
    "rot": dict(system="sde3d_rot", params={}, pstring=dict(n=50, h=0.01, threshold=1e-6, initial="random"),
                updown=dict(n1=100, n2=20, delta=1, h=0.01, threshold=1e-5, max_steps=60000),
                gmam=dict(n=100, h=0.01, threshold=1e-10, initial="random", max_steps=40000)),
    "nonrot": dict(system="sde3d_nonrot", params={},
                   pstring=dict(n=1000, h=0.01, threshold=1e-6, initial="random"),
                   updown=dict(n1=100, n2=20, delta=1, h=0.01, threshold=1e-6, max_steps=60000),
                   gmam=dict(n=100, h=0.01, threshold=1e-8, initial="random", max_steps=45000)),
    "nonrot_fine": dict(system="sde3d_nonrot", params={},
                        pstring=dict(n=1000, h=0.01, threshold=1e-6, initial="random"),
                        updown=dict(n1=200, n2=40, delta=1, h=0.01, threshold=1e-6, max_steps=80000),
                        gmam=dict(n=200, h=0.005, threshold=1e-8, initial="random", max_steps=170000)),
    "ac1d": dict(system="ac1d", params={"kappa": 0.01, "c": 0.1},
                 pstring=dict(n=40, h=0.01, threshold=1e-6, initial="vertical"),
                 updown=dict(n1=40, n2=10, delta=10, h=0.01, threshold=1e-6, max_steps=60000),
                 gmam=dict(n=40, h=0.01, threshold=1e-6, initial="horizontal", max_steps=40000)),
}


def _within(value, window):
    lo, hi = window
    return (lo is None or value >= lo) and (hi is None or value <= hi)


def table1_crossing(column: str, seed: int = 0, cache: dict | None = None):
    """Separatrix point for a Table 1 column, located by p-String."""
    col = TABLE1_COLUMNS[column]
    key = (col["system"], json.dumps(col["params"], sort_keys=True), json.dumps(col["pstring"], sort_keys=True), seed)
    if cache is not None and key in cache:
        return cache[key]
    system = get_system(col["system"], **col["params"])
    ps = col["pstring"]
    sc = SolverConfig(n=ps["n"], h=ps["h"], threshold=ps["threshold"], seed=seed,
                      interpolation=ps.get("interpolation", "linear"))
    X0 = make_initial(system, ps["initial"], ps["n"], seed)
    rep = pstring_run(system, X0[0], X0[-1], X0, sc)
    if cache is not None:
        cache[key] = rep
    return rep


def run_table1_cell(column: str, method: str, seed: int = 0, cache=None) -> dict:
    col = TABLE1_COLUMNS[column]
    system = get_system(col["system"], **col["params"])
    t0 = time.perf_counter()
    row = {"column": column, "method": method, "reference": TABLE1_REFERENCE[column][method],
           "truth": TABLE1_REFERENCE[column]["truth"]}
    try:
        if method == "updown":
            ps = table1_crossing(column, seed, cache)
            u = col["updown"]
            sc = SolverConfig(n=u["n1"], h=u["h"], threshold=u["threshold"], max_steps=u["max_steps"], seed=seed)
            rep = updown_gmam(system, system.sinks[0], ps.point, system.sinks[1],
                              u["n1"], u["n2"], u["delta"], sc)
            row["steps"] = rep.meta["steps_up"]
            row["steps_down"] = rep.meta["steps_down"]
        else:
            g = col["gmam"]
            sc = SolverConfig(n=g["n"], h=g["h"], threshold=g["threshold"], max_steps=g["max_steps"], seed=seed)
            rep = gmam_minimize(system, make_initial(system, g["initial"], g["n"], seed), sc)
            row["steps"] = rep.iterations
        row["computed"] = rep.action
        lo, hi = TABLE1_TOL[(column, method)]
        row["window"] = f"[{lo if lo is not None else '-inf'}, {hi if hi is not None else 'inf'}]"
        row["pass"] = _within(rep.action, (lo, hi))
    except NumericalError as exc:
        row["computed"] = None
        row["pass"] = False
        row["error"] = str(exc)
    row["seconds"] = round(time.perf_counter() - t0, 2)
    return row


def run_table1(columns=None, methods=("updown", "gmam"), seed: int = 0, cache: dict | None = None):
    """Run the Table 1 comparison; failures are recorded per cell and the run continues.

    ``cache`` holds p-String results keyed by system and settings, so that
    columns sharing a crossing point search it once.
    """
    columns = list(columns or TABLE1_COLUMNS)
    cache = {} if cache is None else cache
    rows = []
    for col in columns:
        if col not in TABLE1_COLUMNS:
            raise UsageError(f"unknown column {col!r}; known: {list(TABLE1_COLUMNS)}")
        for m in methods:
            row = run_table1_cell(col, m, seed, cache)
            log.info("table1 %s", row)
            rows.append(row)
    return rows


def table1_markdown(rows) -> str:
    lines = ["| column | method | computed | reference | truth | window | steps | pass |",
             "|---|---|---|---|---|---|---|---|"]
    for r in rows:
        comp = "error" if r.get("computed") is None else f"{r['computed']:.5f}"
        lines.append(f"| {r['column']} | {r['method']} | {comp} | {r['reference']} | {r['truth']:.4f} | "
                     f"{r.get('window', '')} | {r.get('steps', '')} | {'yes' if r['pass'] else 'no'} |")
    return "\n".join(lines) + "\n"


def cmd_table1(args):
    rows = run_table1(args.columns, tuple(args.methods), args.seed or 0)
    md = table1_markdown(rows)
    if args.out:
        FsPath(args.out).write_text(md)
    else:
        print(md)
    if args.csv:
        mio.write_table_csv(rows, args.csv, ["column", "method", "computed", "reference", "truth", "window",
                                             "steps", "steps_down", "pass", "seconds", "error"])
    return 0


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ["param", "value", "seed", "status", "action", "iterations", "is_fixed_point",
                 "period", "point_norm", "deviation", "error"]


def _sweep_row(job, cfg, param, value, seed):
    cfg = copy.deepcopy(cfg)
    if param in ("n", "h", "threshold", "max_steps", "n1", "n2", "delta"):
        cfg[param] = value
    else:
        cfg["params"][param] = value
    cfg["seed"] = seed
    row = {"param": param, "value": value, "seed": seed}
    try:
        system = get_system(cfg["system"], **cfg["params"])
        sc = solver_config(cfg)
        X0 = make_initial(system, cfg["initial"], sc.n, seed)
        if job == "gmam":
            rep = gmam_minimize(system, X0, sc)
            row.update(action=rep.action, iterations=rep.iterations)
        elif job == "pstring":
            rep = pstring_run(system, X0[0], X0[-1], X0, sc)
            row.update(is_fixed_point=rep.is_fixed_point, period=rep.period,
                       point_norm=float(system.norm(rep.point)),
                       action=rep.history[-1], iterations=rep.meta["f"])
            if system.meta.get("kind") == "spde":
                # distance of the found field from the x-uniform part of itself
                grid = system.meta["grid"]
                u = rep.point.reshape(grid)
                flat = u.mean(axis=0, keepdims=True) if u.ndim == 2 else u.mean(keepdims=True)
                row["deviation"] = float(np.sqrt(np.mean((u - flat) ** 2)))
        else:
            raise UsageError(f"unsupported sweep job {job!r}")
        row["status"] = "ok"
    except (NumericalError, ValueError, UsageError) as exc:
        row["status"] = "failed"
        row["error"] = str(exc)
    return row


def run_sweep(param: str, values, job: str = "gmam", base: dict | None = None, workers: int = 1):
    """One row per value; row ``i`` uses seed ``base.seed + i``."""
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(base or {})
    cfg["params"] = dict(cfg.get("params") or {})
    seed0 = int(cfg.get("seed", 0))
    values = list(values)
    if job not in ("gmam", "pstring"):
        raise UsageError(f"unsupported sweep job {job!r}")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        futs = [ex.submit(_sweep_row, job, cfg, param, v, seed0 + i) for i, v in enumerate(values)]
        return [f.result() for f in futs]


def cmd_sweep(args):
    cfg = resolve_config(args)
    values = [_scalar(v) for v in args.values.split(",") if v.strip()] if args.values else []
    rows = run_sweep(args.sweep_param, values, args.job, cfg, args.workers)
    if args.out:
        mio.write_table_csv(rows, args.out, SWEEP_COLUMNS, config=cfg)
    else:
        print(",".join(SWEEP_COLUMNS))
        for r in rows:
            print(",".join("" if r.get(c) is None else str(r.get(c)) for c in SWEEP_COLUMNS))
    return 0


# ---------------------------------------------------------------------------


def _common(p, solver=True):
    p.add_argument("--config", help="YAML file with settings")
    p.add_argument("--system", help="catalog name")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="system parameter (repeatable)")
    if solver:
        p.add_argument("--n", type=int)
        p.add_argument("--h", "--step", dest="h", type=float)
        p.add_argument("--threshold", type=float)
        p.add_argument("--max-steps", dest="max_steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--initial", help="initial path kind")
        p.add_argument("--interpolation", choices=["linear", "cubic"],
                       help="string redistribution rule")
    p.add_argument("--out", help="output file (stdout if omitted)")


def build_parser():
    p = _Parser(prog="mlpaths", description="Separatrix attractors and minimum action paths.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("pstring", help="locate a saddle or periodic orbit on the separatrix")
    _common(s)
    s.set_defaults(func=cmd_pstring)

    s = sub.add_parser("gmam", help="minimize the geometric action between the sinks")
    _common(s)
    s.add_argument("--history-csv")
    s.add_argument("--path-csv")
    s.add_argument("--snapshots", type=int)
    s.set_defaults(func=cmd_gmam)

    s = sub.add_parser("updown", help="up-down gMAM through a given crossing point")
    _common(s)
    s.add_argument("--xs", help="comma-separated crossing point")
    s.add_argument("--xs-from", dest="xs_from", help="p-String report JSON")
    s.add_argument("--n1", type=int)
    s.add_argument("--n2", type=int)
    s.add_argument("--delta", type=int)
    s.add_argument("--history-csv")
    s.add_argument("--path-csv")
    s.add_argument("--snapshots", type=int)
    s.set_defaults(func=cmd_updown)

    s = sub.add_parser("action", help="evaluate the actions of a stored path")
    _common(s, solver=False)
    s.add_argument("--path", required=False)
    s.set_defaults(func=cmd_action)

    s = sub.add_parser("oracle", help="exact barrier actions as CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("table1", help="gMAM vs up-down comparison")
    s.add_argument("--columns", nargs="*", choices=list(TABLE1_COLUMNS))
    s.add_argument("--methods", nargs="*", default=["updown", "gmam"], choices=["updown", "gmam"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_table1)

    s = sub.add_parser("sweep", help="run a job over a list of parameter values")
    _common(s)
    s.add_argument("--sweep-param", dest="sweep_param", required=True)
    s.add_argument("--values", default="")
    s.add_argument("--job", default="gmam", choices=["gmam", "pstring"])
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mlpaths: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"mlpaths: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
