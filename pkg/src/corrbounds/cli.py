"""Command-line front end: ``corrbounds <subcommand> [options]``.

Every subcommand writes a table (CSV by default, JSON with ``--format json``)
to ``--out`` or stdout.  When writing to a file a ``<out>.meta.json`` sidecar
records the configuration, seed, library versions and a timestamp.
Exit codes: 0 success, 1 non-convergence, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import platform
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy

import corrbounds
from corrbounds import dicke, driven, qbounds, radiance, tsirelson
from corrbounds.exceptions import ConvergenceError, SingularSystemError

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)
    converged: bool = True
    raw: str | None = None


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render(table: Table, fmt: str) -> str:
    if table.raw is not None:
        return table.raw + "\n"
    if fmt == "json":
        recs = [{c: _jsonable(v) for c, v in zip(table.columns, r)} for r in table.rows]
        return json.dumps(recs, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


# -------------------------------------------------------------- commands

def cmd_bounds_table(a) -> Table:
    xs = np.linspace(-3.0, 3.0, 25 if a.grid is None else a.grid)
    t = Table(["name", "x", "lhvm", "quantum_numeric", "quantum_closed", "nosig"])
    if xs.size == 0:
        return t
    tol = 1e-7 if a.tol is None else a.tol
    for name in ("QB1", "QB2", "QB3"):
        f = tsirelson.named_functional(name)
        for x in xs:
            x = float(x)
            t.rows.append((name, x, tsirelson.classical_max(f, x), tsirelson.tsirelson_bound(f, x, tol=tol),
                           tsirelson.table_bound(name, x), tsirelson.nosig_max(f, x)))
    f = tsirelson.named_functional("TB")
    t.rows.append(("TB", None, tsirelson.classical_max(f), tsirelson.tsirelson_bound(f, tol=tol),
                   tsirelson.table_bound("TB"), tsirelson.nosig_max(f)))
    return t


def cmd_slice(a) -> Table:
    criteria = [c.strip() for c in a.criteria.split(",") if c.strip()]
    unknown = [c for c in criteria if c not in qbounds.CRITERIA]
    if unknown:
        raise UsageError(f"unknown criterion {unknown}; choose from {sorted(qbounds.CRITERIA)}")
    params = qbounds.default_grid(41 if a.grid is None else a.grid)
    curve = qbounds.trace_boundary(a.kind, criteria, params, seed=a.seed, workers=a.workers,
                                   tol=1e-4 if a.tol is None else a.tol)
    t = Table(["param", "criterion", "xi_max", "converged"],
              [(r.param, r.criterion, r.xi_max, r.converged) for r in curve.rows],
              converged=curve.converged)
    if "npa1ab" in criteria and "qb3" in criteria:
        red = qbounds.red_region(curve)
        if red:
            gap = max(g for _, g in red)
            t.summary.append(f"red region: {len(red)} points in [{red[0][0]:.4g}, {red[-1][0]:.4g}], "
                             f"largest gap {gap:.3g}")
        else:
            t.summary.append("red region: none")
    return t


def _fit_rows(t: Table, time, fit) -> None:
    if not fit.ppt:
        t.rows.append((time, "infeasible: PPT violated", None, None, None, None))
        return
    d = fit.best
    status = "certified" if fit.certified else f"uncertified: {fit.failure}"
    if not fit.certified:
        t.converged = False
    if d.x.size == 0:
        t.rows.append((time, status, None, None, None, d.residual))
    for j, (xj, yj) in enumerate(zip(d.x, d.y), start=1):
        t.rows.append((time, status, j, xj, yj, d.residual))


def cmd_sepfit(a) -> Table:
    t = Table(["t", "status", "j", "x_j", "y_j", "residual"])
    if a.state is not None:
        try:
            with open(a.state) as fh:
                state = dicke.DickeDiagonalState.from_json(fh.read())
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as e:
            raise UsageError(f"cannot read state: {e}") from e
        _fit_rows(t, None, dicke.sds_fit(state, seed=a.seed))
        return t
    if a.N > 8:
        raise UsageError("--N must be <= 8 for separability certification")
    p = radiance.RadianceParams(a.N, a.gamma, radiance.default_times(a.gamma, a.model, 50 if a.grid is None else a.grid))
    traj = radiance.trajectory(p, a.model)
    for ti, s in zip(p.t, traj.states()):
        _fit_rows(t, float(ti), dicke.sds_fit(s, seed=a.seed))
    ok = sum(1 for r in t.rows if r[1] == "certified" and r[2] in (1, None))
    t.summary.append(f"{a.model} N={a.N}: {ok}/{len(p.t)} time points certified")
    return t


def cmd_volumes(a) -> Table:
    t = Table(["N", "method", "estimate", "stderr", "samples", "seed"])
    closed = dicke.sds_volume_closed(a.N)
    t.rows.append((a.N, "closed", float(closed), 0.0, None, None))
    if a.N <= 8:
        t.rows.append((a.N, "quadrature", dicke.sds_volume_quadrature(a.N), None, None, None))
    samples = 10 ** 6 if a.samples is None else a.samples
    est, se = dicke.pptds_volume_mc(a.N, samples, seed=a.seed, workers=a.workers)
    t.rows.append((a.N, "mc", est, se, samples, a.seed))
    z = abs(est - float(closed)) / se if se > 0 else math.inf
    t.summary.append(f"closed volume {closed} = {float(closed):.6g}; MC {est:.6g} +- {se:.2g} ({z:.2f} sigma)")
    return t


def cmd_radiance(a) -> Table:
    n = 60 if a.grid is None else a.grid
    times = np.logspace(-3.0, 2.0, n) / a.gamma
    p = radiance.RadianceParams(a.N, a.gamma, times)
    if a.certify:
        if a.N > 8:
            raise UsageError("--certify requires --N <= 8")
        rep = radiance.certify_separability_over_time(p, "superrad")
        t = Table(["t", "j", "x_j", "y_j", "residual", "certified"], list(rep.rows()),
                  converged=rep.all_certified)
        t.summary.append(f"all certified: {str(rep.all_certified).lower()}; max residual {rep.max_residual:.3g}")
        return t
    sup = radiance.superrad_evolve(p)
    std = radiance.standardrad_evolve(p)
    t = Table(["t", "y", "n1", "superrad", "standardrad"])
    for i, ti in enumerate(p.t):
        for n1 in range(a.N + 1):
            t.rows.append((float(ti), float(-math.expm1(-a.gamma * ti)), n1, sup.chi[i, n1], std.chi[i, n1]))
    return t


def cmd_driven(a) -> Table:
    if a.N < 2 or a.N > 80:
        raise UsageError("--N must lie in [2, 80]")
    if a.omega is not None:
        s = driven.steady_state(driven.DriveSpec(a.N, a.omega))
        t = Table([], raw=s.to_json())
        t.summary.append(f"xi2={driven.spin_squeezing(s):.17g}")
        return t
    omegas = driven.default_omegas(a.N, 48 if a.grid is None else a.grid)
    table = driven.omega_sweep(a.N, omegas)
    t = Table(["N", "Omega", "xi2", "negativity", "converged"],
              [(r.N, r.omega, r.xi2, r.negativity, r.converged) for r in table.rows],
              converged=table.converged)
    if table.rows:
        try:
            edge = driven.squeezing_window_edge(a.N, table)
            t.summary.append(f"squeezing window edge Omega={edge:.6g} ({edge / a.N:.4g} N)")
        except ConvergenceError:
            t.summary.append("squeezing window edge: not bracketed by the sweep")
        om, xi = table.minimizer()
        t.summary.append(f"minimum sampled xi2={xi:.6g} at Omega={om:.6g}")
    return t


COMMANDS = {
    "bounds-table": cmd_bounds_table,
    "slice": cmd_slice,
    "sepfit": cmd_sepfit,
    "volumes": cmd_volumes,
    "radiance": cmd_radiance,
    "driven": cmd_driven,
}


# ---------------------------------------------------------------- parsing

def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s}")
    return v


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--grid", type=_nonneg_int, default=None, help="number of sweep points")
    common.add_argument("--samples", type=_nonneg_int, default=None)
    common.add_argument("--tol", type=_positive_float, default=None)
    common.add_argument("--workers", type=_nonneg_int, default=1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="corrbounds", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=corrbounds.__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("bounds-table", parents=[common], help="linear Bell functional bounds over x")

    s = sub.add_parser("slice", parents=[common], help="quantum boundary along a PR-mixture slice")
    s.add_argument("--kind", choices=("gamma", "beta"), default="beta")
    s.add_argument("--criteria", default="uffink,npa1,qb3,lo2,npa1ab")

    s = sub.add_parser("sepfit", parents=[common], help="separable decomposition of Dicke-diagonal states")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--state", help='JSON file {"N": int, "chi": [...]}')
    g.add_argument("--model", choices=radiance.MODELS)
    s.add_argument("--N", type=int, default=4)
    s.add_argument("--gamma", type=_positive_float, default=1.0)

    s = sub.add_parser("volumes", parents=[common], help="separable and PPT volumes")
    s.add_argument("--N", type=int, default=4)

    s = sub.add_parser("radiance", parents=[common], help="collective vs independent decay populations")
    s.add_argument("--N", type=int, default=4)
    s.add_argument("--gamma", type=_positive_float, default=1.0)
    s.add_argument("--certify", action="store_true", help="certify separability along the collective decay")

    s = sub.add_parser("driven", parents=[common], help="driven steady-state squeezing sweep")
    s.add_argument("--N", type=int, default=10)
    s.add_argument("--omega", type=float, default=None, help="dump the steady state at one drive strength")
    return p


def _metadata(args, argv) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "out"}
    return {
        "command": args.command,
        "argv": list(argv),
        "config": cfg,
        "seed": args.seed,
        "versions": {"corrbounds": corrbounds.__version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, SingularSystemError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = render(table, args.format)
    if args.out is None:
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
            meta = _metadata(args, argv)
            meta["summary"] = table.summary
            with open(args.out + ".meta.json", "w") as fh:
                json.dump(meta, fh, indent=1)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
    for line in table.summary:
        print(line, file=sys.stderr)
    return EXIT_OK if table.converged else EXIT_NONCONVERGED
