"""Repeated seeded runs, mean/variance statistics, rank tables and file output."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import GaParams, PsoParams, ga_optimize, pso_optimize, random_search
from .core import ConfigurationError, RunResult
from .problems import get_problem
from .vdo import VdoParams, optimize as vdo_optimize


def _random(problem, space, n, max_fes, params, seed):
    return random_search(problem, space, max_fes, seed)


# name -> (run function, parameter class or None)
OPTIMIZERS = {
    "vdo": (vdo_optimize, VdoParams),
    "pso": (pso_optimize, PsoParams),
    "ga": (ga_optimize, GaParams),
    "random": (_random, None),
}


def make_params(name: str, overrides: dict | None = None):
    if name not in OPTIMIZERS:
        raise ConfigurationError(f"unknown optimizer {name!r}; available: {sorted(OPTIMIZERS)}")
    cls = OPTIMIZERS[name][1]
    overrides = dict(overrides or {})
    if cls is None:
        if overrides:
            raise ConfigurationError(f"optimizer {name!r} takes no parameters")
        return None
    try:
        return cls(**overrides)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name!r}: {exc}") from None


def run_optimizer(name: str, problem, n: int, max_fes: int, params=None, seed: int = 0) -> RunResult:
    fn = OPTIMIZERS[name][0]
    if params is None:
        params = make_params(name)
    return fn(problem, problem.space, n, max_fes, params, seed)


@dataclass
class OptimizerSpec:
    name: str
    params: dict = field(default_factory=dict)
    label: str | None = None

    @property
    def key(self) -> str:
        return self.label or self.name

    @classmethod
    def parse(cls, item) -> "OptimizerSpec":
        if isinstance(item, str):
            return cls(item)
        if isinstance(item, dict) and "name" in item:
            extra = set(item) - {"name", "params", "label"}
            if extra:
                raise ConfigurationError(f"unknown optimizer keys {sorted(extra)}")
            return cls(item["name"], dict(item.get("params") or {}), item.get("label"))
        raise ConfigurationError(f"bad optimizer entry: {item!r}")


@dataclass
class ExperimentConfig:
    problems: list[str]
    optimizers: list[OptimizerSpec]
    runs: int = 10
    population: int = 50
    max_fes: int = 20_000
    base_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    cec_data: str | None = None

    FIELDS = ("problems", "optimizers", "runs", "population", "max_fes", "base_seed",
              "output_dir", "workers", "cec_data")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.FIELDS)
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        missing = {"problems", "optimizers"} - set(data)
        if missing:
            raise ConfigurationError(f"config is missing {sorted(missing)}")
        kw = dict(data)
        kw["optimizers"] = [OptimizerSpec.parse(o) for o in data["optimizers"]]
        kw["problems"] = list(data["problems"])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def seed(self, run_index: int) -> int:
        return self.base_seed + run_index

    def validate(self) -> None:
        """Check everything that can fail before a single run starts."""
        for name in ("runs", "population", "max_fes", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.base_seed, int) or self.base_seed < 0:
            raise ConfigurationError("base_seed must be a non-negative integer")
        if self.population < 2:
            raise ConfigurationError("population must be >= 2")
        if self.max_fes < self.population:
            raise ConfigurationError("max_fes must be >= population")
        if not self.problems or not self.optimizers:
            raise ConfigurationError("need at least one problem and one optimizer")
        keys = [o.key for o in self.optimizers]
        if len(set(keys)) != len(keys):
            raise ConfigurationError(f"duplicate optimizer labels in {keys}")
        if len(set(self.problems)) != len(self.problems):
            raise ConfigurationError("duplicate problem names")
        for p in self.problems:
            get_problem(p, self.cec_data)
        for o in self.optimizers:
            make_params(o.name, o.params)

    def resolved(self) -> dict:
        """Configuration with every defaulted parameter spelled out."""
        opts = []
        for o in self.optimizers:
            params = make_params(o.name, o.params)
            opts.append({"name": o.name, "label": o.key,
                         "params": params.to_dict() if params is not None else {}})
        return {
            "problems": list(self.problems),
            "optimizers": opts,
            "runs": self.runs,
            "population": self.population,
            "max_fes": self.max_fes,
            "base_seed": self.base_seed,
            "seed_rule": "base_seed + run_index",
            "variance": "population variance over runs (divide by number of runs)",
            "cec_data": self.cec_data,
            "version": __version__,
        }


@dataclass
class RunRecord:
    problem: str
    optimizer: str
    run_index: int
    seed: int
    best_f: float
    best_x: list[float]
    curve: list[float]
    curve_fes: list[int]


@dataclass
class SummaryStats:
    problem: str
    optimizer: str
    mean: float
    variance: float
    best: float
    worst: float
    runs: int

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass
class RankTable:
    problems: list[str]
    optimizers: list[str]
    rank_m: dict[str, list[int]]
    rank_v: dict[str, list[int]]

    def average(self, which: str = "m") -> dict[str, float]:
        table = self.rank_m if which == "m" else self.rank_v
        return {o: float(np.mean([table[p][j] for p in self.problems]))
                for j, o in enumerate(self.optimizers)}


def rank(values) -> list[int]:
    """Ascending ranks, 1 = smallest; ties share the lowest rank of the group.
    NaN sorts last."""
    vals = [math.inf if math.isnan(v) else v for v in map(float, values)]
    if not vals:
        raise ValueError("cannot rank an empty sequence")
    return [1 + sum(w < v for w in vals) for v in vals]


def summarize(records: list[RunRecord]) -> list[SummaryStats]:
    groups: dict[tuple[str, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.problem, r.optimizer), []).append(r.best_f)
    out = []
    for (p, o), vals in groups.items():
        a = np.array(vals)
        out.append(SummaryStats(p, o, float(a.mean()), float(a.var()), float(a.min()),
                                float(a.max()), len(vals)))
    return out


def rank_table(stats: list[SummaryStats], problems: list[str], optimizers: list[str]) -> RankTable:
    lookup = {(s.problem, s.optimizer): s for s in stats}
    rank_m, rank_v = {}, {}
    for p in problems:
        rows = [lookup[(p, o)] for o in optimizers]
        rank_m[p] = rank([s.mean for s in rows])
        rank_v[p] = rank([s.variance for s in rows])
    return RankTable(list(problems), list(optimizers), rank_m, rank_v)


def _run_task(task) -> RunRecord:
    prob_name, spec, run_index, seed, n, max_fes, cec_data = task
    problem = get_problem(prob_name, cec_data)
    params = make_params(spec.name, spec.params)
    res = run_optimizer(spec.name, problem, n, max_fes, params, seed)
    return RunRecord(prob_name, spec.key, run_index, seed, float(res.best_f),
                     [float(v) for v in res.best_x], [float(v) for v in res.curve],
                     [int(v) for v in res.curve_fes])


def run_experiment(cfg: ExperimentConfig, write: bool = True):
    """Run every (problem, optimizer, run) combination; returns
    ``(records, stats, ranks)`` and writes output files when ``write``."""
    cfg.validate()
    tasks = [(p, o, r, cfg.seed(r), cfg.population, cfg.max_fes, cfg.cec_data)
             for p in cfg.problems for o in cfg.optimizers for r in range(cfg.runs)]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_task, tasks))
    else:
        records = [_run_task(t) for t in tasks]
    p_order = {p: i for i, p in enumerate(cfg.problems)}
    o_order = {o.key: i for i, o in enumerate(cfg.optimizers)}
    records.sort(key=lambda r: (p_order[r.problem], o_order[r.optimizer], r.run_index))
    stats = summarize(records)
    ranks = rank_table(stats, cfg.problems, [o.key for o in cfg.optimizers])
    if write:
        emit_outputs(records, stats, ranks, cfg.output_dir, cfg.resolved())
    return records, stats, ranks


SUMMARY_COLUMNS = ["problem", "optimizer", "mean", "variance", "std", "best", "worst",
                   "rank_m", "rank_v"]


def _fmt(v: float) -> str:
    return repr(float(v))


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "-" for c in name)


def curve_filename(problem: str, optimizer: str, run_index: int) -> str:
    return f"{_safe(problem)}_{_safe(optimizer)}_{run_index}.csv"


def write_summary(path, stats: list[SummaryStats], ranks: RankTable) -> None:
    lookup = {(s.problem, s.optimizer): s for s in stats}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for p in ranks.problems:
            for j, o in enumerate(ranks.optimizers):
                s = lookup[(p, o)]
                w.writerow([p, o, _fmt(s.mean), _fmt(s.variance), _fmt(s.std), _fmt(s.best),
                            _fmt(s.worst), ranks.rank_m[p][j], ranks.rank_v[p][j]])


def write_average_ranks(path, ranks: RankTable) -> None:
    avg_m, avg_v = ranks.average("m"), ranks.average("v")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["optimizer", "avg_rank_m", "avg_rank_v"])
        for o in ranks.optimizers:
            w.writerow([o, _fmt(avg_m[o]), _fmt(avg_v[o])])


def emit_outputs(records: list[RunRecord], stats: list[SummaryStats], ranks: RankTable,
                 out_dir, resolved_config: dict | None = None) -> list[Path]:
    out = Path(out_dir)
    written = []
    try:
        (out / "curves").mkdir(parents=True, exist_ok=True)
        for r in records:
            path = out / "curves" / curve_filename(r.problem, r.optimizer, r.run_index)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["iteration", "fes", "best_f"])
                for k, (f, fes) in enumerate(zip(r.curve, r.curve_fes), start=1):
                    w.writerow([k, fes, _fmt(f)])
            written.append(path)
        write_summary(out / "summary.csv", stats, ranks)
        write_average_ranks(out / "ranks.csv", ranks)
        written += [out / "summary.csv", out / "ranks.csv"]
        if resolved_config is not None:
            (out / "config.json").write_text(json.dumps(resolved_config, indent=2, sort_keys=True) + "\n")
            written.append(out / "config.json")
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
    return written


def read_summary(path) -> list[SummaryStats]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"problem", "optimizer", "mean", "variance"} <= set(rows[0]):
        raise ConfigurationError(f"{path}: not a summary file")
    return [SummaryStats(r["problem"], r["optimizer"], float(r["mean"]), float(r["variance"]),
                         float(r.get("best", "nan")), float(r.get("worst", "nan")), 0)
            for r in rows]


def rerank_summary(path, out=None) -> RankTable:
    """Recompute rank_m/rank_v of an existing summary.csv."""
    stats = read_summary(path)
    problems = list(dict.fromkeys(s.problem for s in stats))
    optimizers = list(dict.fromkeys(s.optimizer for s in stats))
    if len(stats) != len(problems) * len(optimizers):
        raise ConfigurationError(f"{path}: every problem needs a row for every optimizer")
    ranks = rank_table(stats, problems, optimizers)
    write_summary(out or path, stats, ranks)
    return ranks


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
