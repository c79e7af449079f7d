"""Virus Diffusion Optimizer.

One outer iteration runs four stages over a population of N candidates:

1. tropism: random receptor dimensions filter the population down to a
   survivor set, and survivors take a selective step toward the best;
2. burst replication: the mean gradient toward the best, scaled by a
   decaying burst factor, drives a gated, sign-flipped step;
3. diffusion: budding (gradient step) or fusion (copy / single-coordinate
   jump to the best), plus occasional Levy reinfection and DE recombination;
4. latency: every evaluated candidate is archived, and once the archive is
   full each individual is restored to its best archived state.

Every candidate is evaluated once per iteration and retained greedily.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    BudgetExhausted,
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
class VdoParams:
    divide_num: int = 4
    tropism_min: float = 0.1
    tropism_max: float = 0.5
    w0: float = 1.0
    act_prob: float = 0.5
    flip_prob: float = 0.2
    p_bud: float = 0.3
    p_levy: float = 0.1
    levy_beta: float = 1.5
    p_de: float = 0.2
    de_f: float = 0.5
    de_cr: float = 0.9
    latency_depth: int = 10
    eta: float = 0.1
    r0_eps: float = 1e-3

    def __post_init__(self):
        if int(self.divide_num) != self.divide_num or self.divide_num < 1:
            raise ConfigurationError("divide_num must be a positive integer")
        if not 0.0 <= self.tropism_min <= self.tropism_max:
            raise ConfigurationError("need 0 <= tropism_min <= tropism_max")
        for name in ("act_prob", "flip_prob", "p_bud", "p_levy", "p_de", "de_cr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.w0 <= 0 or self.eta < 0:
            raise ConfigurationError("w0 must be positive and eta non-negative")
        if not 0.0 < self.levy_beta < 2.0:
            # sigma_u of the Mantegna construction degenerates at beta = 2
            raise ConfigurationError("levy_beta must lie in (0, 2)")
        if int(self.latency_depth) != self.latency_depth or self.latency_depth < 1:
            raise ConfigurationError("latency_depth must be a positive integer")
        if not 0.0 < self.r0_eps < 0.5:
            raise ConfigurationError("r0_eps must lie in (0, 0.5)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BurstContext:
    delta_g: np.ndarray
    beta_t: float
    rho: float
    r0: float


class LatencyArchive:
    """Rolling per-individual memory of the last ``depth`` evaluated states.

    ``rec`` is the 1-based slot written during the current iteration.
    """

    def __init__(self, n: int, dim: int, depth: int):
        self.depth = int(depth)
        self.positions = np.zeros((n, dim, self.depth))
        self.costs = np.full((n, self.depth), np.inf)
        self.filled = np.zeros((n, self.depth), dtype=bool)
        self.rec = 1

    @property
    def full(self) -> bool:
        return self.rec > self.depth

    def advance(self) -> None:
        self.rec += 1


def latency_record(archive: LatencyArchive, i: int, x: np.ndarray, f: float) -> None:
    if not 1 <= archive.rec <= archive.depth:
        raise ValueError(f"archive slot {archive.rec} outside [1, {archive.depth}]")
    s = archive.rec - 1
    archive.positions[i, :, s] = x
    archive.costs[i, s] = f
    archive.filled[i, s] = True


def reactivate(pop: Population, archive: LatencyArchive) -> Population:
    """Restore every individual to its lowest-cost archived state (lowest slot
    on ties) and reset the slot counter."""
    if not archive.full:
        raise ValueError("reactivation requires a full archive")
    costs = np.where(archive.filled, archive.costs, np.inf)
    for i in range(pop.size):
        if not archive.filled[i].any():
            continue
        j = int(np.argmin(costs[i]))
        pop.X[i] = archive.positions[i, :, j]
        pop.fitness[i] = costs[i, j]
    # every archived cost was offered to the best tracker when evaluated
    assert not np.any(costs < pop.best_f), "archive holds a value better than the global best"
    archive.rec = 1
    return pop


# tropism ------------------------------------------------------------------

def receptor_count(dim: int, divide_num: int) -> int:
    return max(1, dim // divide_num)


def tropism_filter(X: np.ndarray, best_x: np.ndarray, params: VdoParams, rng,
                   trace: list | None = None) -> np.ndarray:
    """Indices of the survivors after receptor-dimension filtering.

    If ``trace`` is a list, one ``(previous, kept, result)`` triple of index
    arrays is appended per receptor.
    """
    n, dim = X.shape
    k = receptor_count(dim, params.divide_num)
    receptors = rng.permutation(dim)[:k]
    current = np.arange(n)
    for r in receptors:
        kept = current[X[current, r] > best_x[r]]
        result = current[~np.isin(current, kept)] if kept.size < 0.5 * current.size else kept
        if trace is not None:
            trace.append((current, kept, result))
        current = result
    if current.size == 0:
        return np.arange(n)
    return current


def tropism_step(x: np.ndarray, best_x: np.ndarray, space: SearchSpace, params: VdoParams,
                 rng) -> np.ndarray:
    t = rng.uniform(params.tropism_min, params.tropism_max)
    xi = rng.random(x.size)
    toward = rng.random(x.size) < t
    s = np.where(toward, xi * (best_x - x), (xi - 0.5) * space.width * t)
    return clamp_to_bounds(x + params.eta * s, space)


# burst replication --------------------------------------------------------

def mean_gradient(X: np.ndarray, survivors, best_x: np.ndarray) -> np.ndarray:
    survivors = np.asarray(survivors)
    if survivors.size == 0:
        raise ValueError("mean gradient of an empty survivor set")
    return best_x - X[survivors].mean(axis=0)


def burst_factor(fes: int, max_fes: int) -> float:
    if max_fes <= 0 or not 0 <= fes <= max_fes:
        raise ValueError(f"need 0 <= fes <= max_fes, max_fes > 0 (got {fes}, {max_fes})")
    frac = fes / max_fes
    # 0**0 is taken as 1 (value at fes = 0)
    return (1.0 - frac) ** (2.0 * frac)


def replication_strength(w0: float, beta_t: float) -> float:
    return w0 * beta_t


def step_early(rho: float, beta_t: float, rng, size=None):
    xi = rng.random(size)
    xi2 = rng.random(size)
    return rho * (xi - 0.5) * beta_t * np.sin(2.0 * np.pi * xi2)


def late_bracket(r0: float, beta_t: float) -> float:
    return 1.0 + 0.5 * (1.0 + math.tanh(r0 / math.sqrt(1.0 - r0 * r0))) * beta_t


def step_late(rho: float, beta_t: float, r0: float, rng, size=None):
    if not 0.0 < r0 < 1.0:
        raise ValueError(f"r0 must be clamped into (0, 1), got {r0}")
    xi = rng.random(size)
    return 0.1 * rho * (xi - 0.5) * beta_t * late_bracket(r0, beta_t)


def burst_context(X: np.ndarray, survivors, best_x: np.ndarray, fes: int, max_fes: int,
                  params: VdoParams) -> BurstContext:
    survivors = np.asarray(survivors)
    beta_t = burst_factor(fes, max_fes)
    r0 = survivors.size / X.shape[0]
    r0 = min(max(r0, params.r0_eps), 1.0 - params.r0_eps)
    return BurstContext(
        delta_g=mean_gradient(X, survivors, best_x),
        beta_t=beta_t,
        rho=replication_strength(params.w0, beta_t),
        r0=r0,
    )


def _draw_step(ctx: BurstContext, rng, size=None):
    if rng.random() < 0.5:
        return step_early(ctx.rho, ctx.beta_t, rng, size)
    return step_late(ctx.rho, ctx.beta_t, ctx.r0, rng, size)


def burst_update(x: np.ndarray, ctx: BurstContext, space: SearchSpace, params: VdoParams,
                 rng) -> np.ndarray:
    s = _draw_step(ctx, rng)
    active = rng.random(x.size) < params.act_prob
    sign = np.where(rng.random(x.size) < params.flip_prob, -1.0, 1.0)
    return clamp_to_bounds(x + s * active * sign * ctx.delta_g, space)


# diffusion ----------------------------------------------------------------

def budding_update(x: np.ndarray, ctx: BurstContext, space: SearchSpace, params: VdoParams,
                   rng) -> np.ndarray:
    s = _draw_step(ctx, rng, size=x.size)
    return clamp_to_bounds(x + s * ctx.delta_g, space)


def fusion_jump(x: np.ndarray, best_x: np.ndarray, ctx: BurstContext, space: SearchSpace,
                rng) -> np.ndarray:
    if rng.random() < 0.5:
        r = int(rng.integers(x.size))
        out = x.copy()
        out[r] = best_x[r] + 0.1 * (rng.random() - 0.5) * ctx.beta_t * ctx.delta_g[r]
    else:
        alpha = float(rng.integers(2))
        out = (1.0 - alpha) * x + alpha * best_x
    return clamp_to_bounds(out, space)


def mantegna_sigma(beta: float) -> float:
    if not 0.0 < beta < 2.0:
        raise ValueError(f"Levy index must lie in (0, 2), got {beta}")
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_vector(dim: int, beta: float, rng) -> np.ndarray:
    sigma = mantegna_sigma(beta)
    u = rng.standard_normal(dim) * sigma
    v = rng.standard_normal(dim)
    return u / np.abs(v) ** (1.0 / beta)


def levy_reinfection(x: np.ndarray, best_x: np.ndarray, space: SearchSpace, params: VdoParams,
                     rng) -> np.ndarray:
    step = levy_vector(x.size, params.levy_beta, rng)
    return clamp_to_bounds(x + step * (best_x - x), space)


def de_recombination(X: np.ndarray, i: int, target: np.ndarray, space: SearchSpace,
                     params: VdoParams, rng) -> np.ndarray:
    """rand/1/bin trial built from population rows; ``target`` is the
    candidate it crosses with. Populations below 4 are returned unchanged."""
    n, dim = X.shape
    if n < 4:
        return target
    picks: list[int] = []
    while len(picks) < 3:
        j = int(rng.integers(n))
        if j != i and j not in picks:
            picks.append(j)
    a, b, c = picks
    mutant = X[a] + params.de_f * (X[b] - X[c])
    cross = rng.random(dim) < params.de_cr
    cross[int(rng.integers(dim))] = True
    return clamp_to_bounds(np.where(cross, mutant, target), space)


# main loop ----------------------------------------------------------------

def optimize(problem, space: SearchSpace | None = None, n: int = 50, max_fes: int = 100_000,
             params: VdoParams | None = None, seed: int = 0, dense: bool = False,
             observer=None) -> RunResult:
    """Minimize ``problem`` until ``max_fes`` evaluations have been spent.

    ``observer(pop, it)``, if given, is called after every outer iteration.
    With ``dense=True`` the best-so-far after every evaluation is kept in
    ``RunResult.trace``.
    """
    space = space if space is not None else problem.space
    params = params if params is not None else VdoParams()
    if n < 2:
        raise ConfigurationError("population size must be >= 2")
    if max_fes < n:
        raise ConfigurationError(f"max_fes ({max_fes}) must be >= population size ({n})")

    rng = RngStream(seed)
    pop = init_population(space, n, rng)
    if dense:
        pop.trace = []
    budget = Budget(max_fes)
    for i in range(n):
        ind = Individual(pop.X[i])
        pop.fitness[i] = evaluate(ind, problem, budget, pop)

    archive = LatencyArchive(n, space.dim, params.latency_depth)
    curve: list[float] = []
    curve_fes: list[int] = []
    it = 0
    while not budget.exhausted:
        survivors = tropism_filter(pop.X, pop.best_x, params, rng)
        work = pop.X.copy()
        for i in survivors:
            work[i] = tropism_step(work[i], pop.best_x, space, params, rng)
        ctx = burst_context(work, survivors, pop.best_x, budget.fes, max_fes, params)

        for i in range(n):
            x = burst_update(work[i], ctx, space, params, rng)
            if rng.random() < params.p_bud:
                x = fusion_jump(x, pop.best_x, ctx, space, rng)
            else:
                x = budding_update(x, ctx, space, params, rng)
            if rng.random() < params.p_levy:
                x = levy_reinfection(x, pop.best_x, space, params, rng)
            if rng.random() < params.p_de:
                x = de_recombination(pop.X, i, x, space, params, rng)
            try:
                f_new = evaluate(Individual(x), problem, budget, pop)
            except BudgetExhausted:
                break
            latency_record(archive, i, x, f_new)
            if f_new < pop.fitness[i]:
                pop.X[i] = x
                pop.fitness[i] = f_new
            if budget.exhausted:
                break

        archive.advance()
        if archive.full:
            reactivate(pop, archive)
        it += 1
        curve.append(pop.best_f)
        curve_fes.append(budget.fes)
        if observer is not None:
            observer(pop, it)

    return RunResult(pop.best_x.copy(), pop.best_f, curve, curve_fes, budget.fes, pop.trace)
