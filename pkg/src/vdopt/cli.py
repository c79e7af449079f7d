"""Command line entry point: ``vdopt run | list | rank``."""
from __future__ import annotations

import argparse
import sys

from .core import ConfigurationError
from .harness import OPTIMIZERS, ExperimentConfig, OptimizerSpec, rerank_summary, run_experiment
from .problems import DataFormatError, UnsupportedFunction, problem_names

EXIT_CONFIG, EXIT_DATA, EXIT_IO = 2, 3, 4


def _split(values):
    out = []
    for v in values or []:
        out.extend(s for s in v.split(",") if s)
    return out


def build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        if not args.problem or not args.algo:
            raise ConfigurationError("give --config or both --problem and --algo")
        cfg = ExperimentConfig(problems=[], optimizers=[])
    if args.problem:
        cfg.problems = _split(args.problem)
    if args.algo:
        cfg.optimizers = [OptimizerSpec(name) for name in _split(args.algo)]
    for attr, flag in (("runs", "runs"), ("population", "pop"), ("max_fes", "max_fes"),
                       ("base_seed", "seed"), ("output_dir", "out"), ("workers", "workers"),
                       ("cec_data", "cec_data")):
        value = getattr(args, flag)
        if value is not None:
            setattr(cfg, attr, value)
    return cfg


def cmd_run(args) -> int:
    cfg = build_config(args)
    records, stats, ranks = run_experiment(cfg)
    for s in stats:
        print(f"{s.problem:<16} {s.optimizer:<10} mean={s.mean:.6e} var={s.variance:.3e} "
              f"best={s.best:.6e}")
    print(f"wrote {len(records)} runs to {cfg.output_dir}")
    return 0


def cmd_list(args) -> int:
    print("problems:")
    for name in problem_names():
        print(f"  {name}")
    print("optimizers:")
    for name in OPTIMIZERS:
        print(f"  {name}")
    return 0


def cmd_rank(args) -> int:
    ranks = rerank_summary(args.summary, args.out)
    avg_m, avg_v = ranks.average("m"), ranks.average("v")
    print(f"{'optimizer':<12} {'avg_rank_m':>10} {'avg_rank_v':>10}")
    for o in ranks.optimizers:
        print(f"{o:<12} {avg_m[o]:>10.4f} {avg_v[o]:>10.4f}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vdopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", help="experiment config JSON")
    run.add_argument("--problem", action="append", help="problem name(s), repeat or comma-separate")
    run.add_argument("--algo", action="append", help="optimizer name(s)")
    run.add_argument("--runs", type=int)
    run.add_argument("--pop", type=int)
    run.add_argument("--max-fes", dest="max_fes", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.add_argument("--cec-data", dest="cec_data")
    run.set_defaults(func=cmd_run)

    lst = sub.add_parser("list", help="list problems and optimizers")
    lst.set_defaults(func=cmd_list)

    rk = sub.add_parser("rank", help="re-rank an existing summary.csv")
    rk.add_argument("summary")
    rk.add_argument("--out", help="write here instead of overwriting the input")
    rk.set_defaults(func=cmd_rank)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, UnsupportedFunction) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
