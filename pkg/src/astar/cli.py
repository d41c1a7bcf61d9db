"""Command-line harness.

Exit codes: 0 pass, 1 verification failure, 2 solver non-convergence,
64 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_NOCONV, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _jobs(args) -> int:
    env = os.environ.get("ASTAR_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"ASTAR_JOBS must be an integer, got {env!r}") from None
    return max(1, args.jobs)


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped with the package (e.g. ``weakstar.cfg``)."""
    return Path(str(resources.files("astar") / "configs" / name))


def _resolve_config(path: str) -> RunConfig:
    p = Path(path)
    if not p.exists() and (bundled_config(path)).exists():
        p = bundled_config(path)
    return load_config(p)


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    from .tensor_core import Constants
    from .verification import run_identity_suite

    rep = run_identity_suite(args.seed, args.points, args.tol, Constants(args.c, args.G))
    sys.stdout.write(_dump(rep))
    if args.out:
        Path(args.out).write_text(_dump(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_ricci_oracle(args) -> int:
    from .convergence import minkowski_ricci_discrepancy, ricci_convergence_study

    rep = ricci_convergence_study(args.h, args.fields, args.seed, jobs=_jobs(args))
    rep["minkowski_richardson"] = minkowski_ricci_discrepancy(args.h)
    print(f"{'h':>10} {'max discrepancy':>16} {'order':>7}")
    for i, (h, e) in enumerate(zip(rep["h"], rep["max_discrepancy"])):
        o = f"{rep['orders'][i - 1]:7.3f}" if i else " " * 7
        print(f"{h:10.3e} {e:16.6e} {o}")
    print(f"min observed order {rep['min_order']:.3f} (required >= {args.min_order})")
    rep["passed"] = rep["min_order"] >= args.min_order
    if args.out:
        Path(args.out).write_text(_dump(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _write_run(out: Path, cfg: RunConfig, state, report):
    from .solver import FIELD_COLUMNS, fields_table

    out.mkdir(parents=True, exist_ok=True)
    (out / "config-echo.cfg").write_text(cfg.echo())
    if state is not None:
        np.savetxt(out / "fields.csv", fields_table(state, cfg.constants()), delimiter=",",
                   header=",".join(FIELD_COLUMNS), comments="", fmt="%.17g")
    (out / "report.json").write_text(_dump(report))


def cmd_solve(args) -> int:
    from .solver import fixed_point_solve

    cfg = _resolve_config(args.config)
    state, rep = fixed_point_solve(cfg.grid(), cfg.eos(), cfg.constants(), cfg.solver_options(), cfg.omega())
    report = rep.as_dict()
    report["config"] = cfg.echo().splitlines()
    if state is not None:
        report["first_integral_const"] = state.first_integral_const
    _write_run(Path(args.out), cfg, state, report)
    print(f"{'converged' if rep.converged else 'NOT converged'} after {rep.outer_iters} outer iterations: "
          f"{rep.message}")
    return EXIT_OK if rep.converged else EXIT_NOCONV


def cmd_consistency(args) -> int:
    from .convergence import consistency_refinement

    rep = consistency_refinement(args.levels, args.kind, jobs=_jobs(args))
    ok = all(abs(o - 2.0) <= args.order_slack for o in rep["orders"])
    rep["passed"] = bool(ok)
    sys.stdout.write(_dump(rep))
    if args.out:
        Path(args.out).write_text(_dump(rep))
    return EXIT_OK if ok else EXIT_FAIL


def _load_run(run_dir: Path):
    from .solver import state_from_table

    cfg = load_config(run_dir / "config-echo.cfg")
    table = np.loadtxt(run_dir / "fields.csv", delimiter=",", skiprows=1, ndmin=2)
    return cfg, state_from_table(table, cfg.omega())


def cmd_corotate(args) -> int:
    from .solver import verify_corotation

    cfg, state = _load_run(Path(args.run_dir))
    rep = verify_corotation(state, cfg.constants(), args.tol)
    sys.stdout.write(_dump(rep))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_export(args) -> int:
    cfg, state = _load_run(Path(args.run_dir))
    arrays = {n: getattr(state, n) for n in ("F", "A", "K", "Pi", "rho", "P")}
    W, Z = state.grid.mesh()
    arrays.update(w=W, z=Z)
    out = Path(args.out)
    if args.format == "npz":
        np.savez(out, **arrays)
    else:
        out.write_text(_dump({k: v.tolist() for k, v in arrays.items()}))
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="astar", description="Rotating stationary spacetimes: identity checks and equilibrium solves.")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for independent cases (ASTAR_JOBS overrides)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("verify", help="randomized algebraic identity suite")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--G", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("ricci-oracle", help="closed-form vs finite-difference Ricci convergence table")
    s.add_argument("--h", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3])
    s.add_argument("--fields", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-order", type=float, default=1.9)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ricci_oracle)

    s = sub.add_parser("solve", help="fixed-point equilibrium solve")
    s.add_argument("config", help="config file (or name of a bundled one: vacuum.cfg, weakstar.cfg)")
    s.add_argument("--out", default="run")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("consistency", help="refinement study of the K consistency defect")
    s.add_argument("--kind", choices=("unprimed", "primed", "vacuum"), default="unprimed")
    s.add_argument("--levels", type=int, nargs="+", default=[16, 32, 64])
    s.add_argument("--order-slack", type=float, default=0.25)
    s.add_argument("--out")
    s.set_defaults(func=cmd_consistency)

    s = sub.add_parser("corotate", help="check the rigid corotation transform on a solved state")
    s.add_argument("run_dir")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_corotate)

    s = sub.add_parser("export", help="convert a run's fields.csv to npz or json arrays")
    s.add_argument("run_dir")
    s.add_argument("--format", choices=("npz", "json"), default="npz")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if getattr(args, "points", 1) < 0 or getattr(args, "tol", 0.0) < 0:
            raise ConfigError("points and tol must be non-negative")
        return args.func(args)
    except ConfigError as exc:
        print(f"astar: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, OSError) as exc:
        print(f"astar: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
