"""Reference optimizers run under the same budget and seeding contract as VDO."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    Budget,
    ConfigurationError,
    Individual,
    Population,
    RngStream,
    RunResult,
    SearchSpace,
    clamp_to_bounds,
    evaluate,
    init_population,
)


@dataclass(frozen=True)
class PsoParams:
    c1: float = 2.0
    c2: float = 2.0
    w_start: float = 0.9
    w_end: float = 0.4
    vmax_frac: float = 0.2

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigurationError("c1 and c2 must be non-negative")
        if self.vmax_frac <= 0:
            raise ConfigurationError("vmax_frac must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GaParams:
    pc: float = 0.8
    pm: float = 0.05
    tournament: int = 3
    blend_alpha: float = 0.5
    mutation_scale: float = 0.1
    elites: int = 1

    def __post_init__(self):
        for name in ("pc", "pm"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.tournament < 1 or self.elites < 0:
            raise ConfigurationError("tournament >= 1 and elites >= 0 required")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_run(n, max_fes):
    if n < 2:
        raise ConfigurationError("population size must be >= 2")
    if max_fes < n:
        raise ConfigurationError(f"max_fes ({max_fes}) must be >= population size ({n})")


def _evaluate_all(X, problem, budget, pop, fitness):
    """Evaluate rows of X in order; stops early when the budget runs out.
    Returns the number of rows evaluated."""
    for i in range(X.shape[0]):
        if budget.exhausted:
            return i
        fitness[i] = evaluate(Individual(X[i]), problem, budget, pop)
    return X.shape[0]


def pso_optimize(problem, space: SearchSpace | None = None, n: int = 50,
                 max_fes: int = 100_000, params: PsoParams | None = None, seed: int = 0,
                 dense: bool = False, observer=None) -> RunResult:
    """Global-best PSO, inertia decreasing linearly with spent budget."""
    space = space if space is not None else problem.space
    params = params if params is not None else PsoParams()
    _check_run(n, max_fes)
    rng = RngStream(seed)
    pop = init_population(space, n, rng)
    if dense:
        pop.trace = []
    budget = Budget(max_fes)
    vmax = params.vmax_frac * space.width
    V = rng.uniform(-1.0, 1.0, (n, space.dim)) * vmax
    _evaluate_all(pop.X, problem, budget, pop, pop.fitness)
    X = pop.X.copy()  # current positions; pop.X holds personal bests
    curve, curve_fes = [], []
    while not budget.exhausted:
        w = params.w_start - (params.w_start - params.w_end) * budget.fraction
        r1 = rng.random((n, space.dim))
        r2 = rng.random((n, space.dim))
        V = w * V + params.c1 * r1 * (pop.X - X) + params.c2 * r2 * (pop.best_x - X)
        V = np.clip(V, -vmax, vmax)
        X = np.array([clamp_to_bounds(row, space) for row in X + V])
        for i in range(n):
            if budget.exhausted:
                break
            f = evaluate(Individual(X[i]), problem, budget, pop)
            if f < pop.fitness[i]:
                pop.X[i] = X[i]
                pop.fitness[i] = f
        curve.append(pop.best_f)
        curve_fes.append(budget.fes)
        if observer is not None:
            observer(pop, len(curve))
    return RunResult(pop.best_x.copy(), pop.best_f, curve, curve_fes, budget.fes, pop.trace)


def _tournament(fitness, size, rng) -> int:
    idx = rng.integers(fitness.size, size=size)
    return int(idx[np.argmin(fitness[idx])])


def ga_optimize(problem, space: SearchSpace | None = None, n: int = 50,
                max_fes: int = 100_000, params: GaParams | None = None, seed: int = 0,
                dense: bool = False, observer=None) -> RunResult:
    """Generational real-coded GA: tournament selection, blend crossover,
    per-gene gaussian mutation and elitism."""
    space = space if space is not None else problem.space
    params = params if params is not None else GaParams()
    _check_run(n, max_fes)
    rng = RngStream(seed)
    pop = init_population(space, n, rng)
    if dense:
        pop.trace = []
    budget = Budget(max_fes)
    _evaluate_all(pop.X, problem, budget, pop, pop.fitness)
    sigma = params.mutation_scale * space.width
    elites = min(params.elites, n - 1)
    curve, curve_fes = [], []
    while not budget.exhausted:
        order = np.argsort(pop.fitness, kind="stable")
        children = []
        while len(children) < n - elites:
            p1 = pop.X[_tournament(pop.fitness, params.tournament, rng)]
            p2 = pop.X[_tournament(pop.fitness, params.tournament, rng)]
            if rng.random() < params.pc:
                a = params.blend_alpha
                lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
                span = hi - lo
                u = rng.random((2, space.dim))
                pair = lo - a * span + u * (1.0 + 2.0 * a) * span
            else:
                pair = np.vstack([p1, p2])
            for child in pair:
                mutate = rng.random(space.dim) < params.pm
                child = child + mutate * rng.standard_normal(space.dim) * sigma
                children.append(clamp_to_bounds(child, space))
        children = np.array(children[: n - elites])
        child_fit = np.full(len(children), np.inf)
        done = _evaluate_all(children, problem, budget, pop, child_fit)
        keep = order[:elites]
        newX = np.vstack([pop.X[keep], children[:done], pop.X[order[elites:elites + len(children) - done]]])
        newF = np.concatenate([pop.fitness[keep], child_fit[:done],
                               pop.fitness[order[elites:elites + len(children) - done]]])
        pop.X, pop.fitness = newX, newF
        curve.append(pop.best_f)
        curve_fes.append(budget.fes)
        if observer is not None:
            observer(pop, len(curve))
    return RunResult(pop.best_x.copy(), pop.best_f, curve, curve_fes, budget.fes, pop.trace)


def random_search(problem, space: SearchSpace | None = None, max_fes: int = 100_000,
                  seed: int = 0, dense: bool = False, observer=None) -> RunResult:
    """Uniform i.i.d. sampling; one curve point per evaluation."""
    space = space if space is not None else problem.space
    rng = RngStream(seed)
    budget = Budget(max_fes)
    pop = Population(X=np.zeros((0, space.dim)), fitness=np.zeros(0),
                     trace=[] if dense else None)
    curve, curve_fes = [], []
    while not budget.exhausted:
        x = clamp_to_bounds(space.lb + rng.random(space.dim) * space.width, space)
        evaluate(Individual(x), problem, budget, pop)
        curve.append(pop.best_f)
        curve_fes.append(budget.fes)
        if observer is not None:
            observer(pop, len(curve))
    return RunResult(pop.best_x.copy(), pop.best_f, curve, curve_fes, budget.fes, pop.trace)
