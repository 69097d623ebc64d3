"""Command line entry point.

    symground run <scenario> --seed S --out DIR
    symground compare <scenario> --seeds N
    symground gest <scenario> --lambda-grid 0 0.5 1 [--isolated]
    symground symbols <scenario> --rounds R
    symground validate <scenario>

``<scenario>`` is a YAML path or the name of a bundled scenario. Errors are
reported as ``ClassName: message`` on stderr with a class-specific exit code.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import SymgroundError
from .scenario import bundled_scenarios, load_scenario, resolve_scenario_path, validate_scenario

log = logging.getLogger("symground")


def _seeds(sc, n, first):
    n = sc.experiment.seeds if n is None else n
    first = sc.experiment.first_seed if first is None else first
    return list(range(first, first + n))


def _cmd_run(args) -> int:
    from .metrics import emit_metrics, emit_plot
    from .population import run_simulation

    sc = _load(args)
    if args.steps is not None:
        sc = sc.with_steps(args.steps)
    out = Path(args.out if args.out is not None else sc.output.dir)
    try:
        series = run_simulation(sc, args.seed)
    except SymgroundError as exc:
        partial = getattr(exc, "series", None)
        if partial is not None and len(partial):
            emit_metrics(partial, out / f"{sc.name}_seed{args.seed}.csv")
        raise
    path = emit_metrics(series, out / f"{sc.name}_seed{args.seed}.csv")
    if sc.output.plot and not args.no_plot:
        try:
            emit_plot(series, path.with_suffix(".svg"))
        except Exception as exc:  # plots are best effort
            log.warning("plot failed: %s", exc)
    status = "extinct at %d" % series.extinct_at if series.extinct_at is not None else "survived"
    print(f"{path} ({len(series)} rows, {status})")
    return 0


def _cmd_compare(args) -> int:
    from .experiments import compare_experiment

    sc = _load(args)
    if args.steps is not None:
        sc = sc.with_steps(args.steps)
    sigmas = args.sigma_grid if args.sigma_grid else None
    rep = compare_experiment(sc, sigmas, _seeds(sc, args.seeds, args.first_seed), jobs=args.jobs)
    print("\n".join(rep.summary_lines()))
    return 0


def _cmd_gest(args) -> int:
    from .experiments import gest_experiment

    sc = _load(args)
    if args.steps is not None:
        sc = sc.with_steps(args.steps)
    rep = gest_experiment(
        sc,
        args.lambda_grid if args.lambda_grid else None,
        _seeds(sc, args.seeds, args.first_seed),
        isolated=args.isolated,
        jobs=args.jobs,
    )
    print("\n".join(rep.summary_lines()))
    return 0


def _cmd_symbols(args) -> int:
    from .experiments import symbol_experiment

    sc = _load(args)
    traj = symbol_experiment(sc, args.rounds, _seeds(sc, args.seeds, args.first_seed), jobs=args.jobs)
    print("\n".join(traj.summary_lines()))
    return 0


def _cmd_validate(args) -> int:
    sc = _load(args)
    validate_scenario(sc)
    print(f"{sc.name}: ok")
    return 0


def _cmd_list(args) -> int:
    for name in bundled_scenarios():
        print(name)
    return 0


def _load(args):
    return load_scenario(resolve_scenario_path(args.scenario))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symground", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeds=True):
        sp.add_argument("scenario", help="scenario YAML path or bundled scenario name")
        if seeds:
            sp.add_argument("--seeds", type=int, default=None, help="number of seeds")
            sp.add_argument("--first-seed", type=int, default=None)
            sp.add_argument("--jobs", type=int, default=None, help="worker processes (default $SYMGROUND_JOBS or 1)")

    sp = sub.add_parser("run", help="single run, writes a metrics CSV")
    common(sp, seeds=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("compare", help="G-loop vs best fixed spread")
    common(sp)
    sp.add_argument("--sigma-grid", type=float, nargs="+", default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.set_defaults(func=_cmd_compare)

    sp = sub.add_parser("gest", help="goal-driven modulation across couplings")
    common(sp)
    sp.add_argument("--lambda-grid", type=float, nargs="+", default=None)
    sp.add_argument("--isolated", action="store_true", help="keep goal parameters fixed (not evolvable)")
    sp.add_argument("--steps", type=int, default=None)
    sp.set_defaults(func=_cmd_gest)

    sp = sub.add_parser("symbols", help="closed naming game")
    common(sp)
    sp.add_argument("--rounds", type=int, default=None)
    sp.set_defaults(func=_cmd_symbols)

    sp = sub.add_parser("validate", help="load and validate a scenario")
    common(sp, seeds=False)
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("list", help="list bundled scenarios")
    sp.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SymgroundError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
