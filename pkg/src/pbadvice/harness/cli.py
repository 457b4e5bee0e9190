"""Command-line entry point: ``pbadvice {run,sweep-pj,check,plot}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checks import SUITES, run_suite
from .config import ConfigError, load_config
from .plotting import emit_success_svg, emit_svg, emit_sweep_svg
from .records import emit_csv, emit_table, read_csv
from .runner import aggregate_curves, run_experiment, success_table, sweep_pj


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # Declared on the root parser and again on each subcommand, so the flags
    # work before or after the subcommand name.
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed-offset", type=int, default=default(0),
                        help="add this to every configured seed")
    parser.add_argument("--jobs", type=int, default=default(1), help="parallel worker processes")
    parser.add_argument("--out-dir", type=Path, default=default(Path("out")),
                        help="directory for CSV and SVG outputs")


def _pj_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError("jump probabilities must lie in [0, 1]")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pbadvice", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("run", parents=[common], help="run every (scheme, seed) pair of a config")
    p.add_argument("config", type=Path)

    p = sub.add_parser("sweep-pj", parents=[common], help="early-return table across jump probabilities")
    p.add_argument("config", type=Path)
    p.add_argument("--pj", type=_pj_list, default=[0.1, 0.2, 0.3, 0.5])
    p.add_argument("--first-episodes", type=int, default=100)

    p = sub.add_parser("check", parents=[common], help="run a property suite")
    p.add_argument("suite", choices=[*SUITES, "all"])
    p.add_argument("--quick", action="store_true", help="smaller samples, same tolerances")

    p = sub.add_parser("plot", parents=[common], help="learning curves from a runs CSV")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--window", type=int, default=10, help="trailing smoothing window")
    return parser


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, jobs=args.jobs, seed_offset=args.seed_offset)
    out = args.out_dir
    meta = {"domain": cfg.domain, "seeds": len(cfg.seeds), "seed_offset": args.seed_offset,
            "episodes": cfg.episodes, "window": cfg.smoothing_window}
    csv_path = emit_csv(result.records, out / "runs.csv", meta)
    curves = aggregate_curves(result.records, cfg.smoothing_window)
    svg_path = emit_svg(curves, out / "curves.svg", cfg.smoothing_window, title=cfg.domain, n_seeds=len(cfg.seeds))
    print(f"wrote {csv_path} ({len(result.records)} records) and {svg_path}")
    if result.converged:
        rates = success_table(result)
        rows = [{"scheme": s, "seeds": len(cfg.seeds),
                 "converged": sum(ok for (sc, _), ok in result.converged.items() if sc == s),
                 "success_rate": rates[s]} for s in cfg.schemes]
        emit_table(rows, ["scheme", "seeds", "converged", "success_rate"], out / "success.csv",
                   comment="fraction of runs whose final mean policy reaches the goal")
        emit_success_svg(rates, out / "success.svg", n_seeds=len(cfg.seeds))
        for row in rows:
            print(f"{row['scheme']:>16}: {row['converged']}/{row['seeds']} converged")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    result = sweep_pj(cfg, args.pj, jobs=args.jobs, seed_offset=args.seed_offset,
                      first_episodes=args.first_episodes)
    table = result.mean_table()
    rows = [{"scheme": s, **{f"pj={pj:g}": table[s][pj] for pj in result.pj_values}} for s in cfg.schemes]
    columns = ["scheme", *(f"pj={pj:g}" for pj in result.pj_values)]
    out = args.out_dir
    emit_table(rows, columns, out / "sweep.csv",
               comment=f"mean return over the first {args.first_episodes} episodes, {len(cfg.seeds)} seeds")
    emit_sweep_svg(table, out / "sweep.svg", args.first_episodes)
    for row in rows:
        print(f"{row['scheme']:>16}: " + "  ".join(f"{c}={row[c]:.1f}" for c in columns[1:]))
    return 0


def cmd_check(args) -> int:
    results = run_suite(args.suite, quick=args.quick)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return 1 if failed else 0


def cmd_plot(args) -> int:
    records = read_csv(args.csv)
    if not records:
        print(f"{args.csv} holds no records", file=sys.stderr)
        return 1
    seeds = len({r.seed for r in records})
    path = emit_svg(aggregate_curves(records, args.window), args.out, args.window, n_seeds=seeds)
    print(f"wrote {path}")
    return 0


COMMANDS = {"run": cmd_run, "sweep-pj": cmd_sweep, "check": cmd_check, "plot": cmd_plot}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
