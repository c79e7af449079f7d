"""Search space, population container, seeded RNG and evaluation budget.

Everything here is shared by the VDO optimizer and the baselines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Fitness of an individual that has not been evaluated yet. NaN fails every
# comparison, so it can never be mistaken for (or overwrite) a real best.
UNEVALUATED = float("nan")


class ConfigurationError(ValueError):
    """Invalid search space, parameters or experiment configuration."""


class BudgetExhausted(RuntimeError):
    """Raised when an evaluation is requested after ``max_fes`` was reached."""


def is_unevaluated(f: float) -> bool:
    return math.isnan(f)


@dataclass
class SearchSpace:
    lb: np.ndarray
    ub: np.ndarray
    integer_mask: np.ndarray | None = None
    grid: np.ndarray | None = None

    def __post_init__(self):
        self.lb = np.atleast_1d(np.asarray(self.lb, dtype=float)).copy()
        self.ub = np.atleast_1d(np.asarray(self.ub, dtype=float)).copy()
        if self.lb.ndim != 1 or self.lb.shape != self.ub.shape:
            raise ConfigurationError("lb and ub must be 1-D vectors of equal length")
        if self.lb.size < 1:
            raise ConfigurationError("dimension must be >= 1")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise ConfigurationError("bounds must be finite")
        if np.any(self.lb > self.ub):
            bad = np.flatnonzero(self.lb > self.ub).tolist()
            raise ConfigurationError(f"lb > ub in dimensions {bad}")
        d = self.lb.size
        if self.integer_mask is None:
            self.integer_mask = np.zeros(d, dtype=bool)
        self.integer_mask = np.asarray(self.integer_mask, dtype=bool).reshape(-1)
        if self.grid is None:
            self.grid = np.ones(d)
        self.grid = np.broadcast_to(np.asarray(self.grid, dtype=float), (d,)).copy()
        if self.integer_mask.shape != (d,):
            raise ConfigurationError("integer_mask must have length dim")
        if np.any(self.grid[self.integer_mask] <= 0):
            raise ConfigurationError("grid spacing must be positive")
        self._has_int = bool(self.integer_mask.any())

    @property
    def dim(self) -> int:
        return self.lb.size

    @property
    def width(self) -> np.ndarray:
        return self.ub - self.lb

    @classmethod
    def box(cls, dim: int, low: float, high: float) -> "SearchSpace":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lb) and np.all(x <= self.ub))


def clamp_to_bounds(x: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Project ``x`` onto the box; integer-masked dimensions are snapped to
    their grid and clamped again."""
    out = np.minimum(np.maximum(x, space.lb), space.ub)
    if space._has_int:
        m = space.integer_mask
        g = space.grid[m]
        out[m] = np.round(out[m] / g) * g
        out = np.minimum(np.maximum(out, space.lb), space.ub)
    return out


class RngStream:
    """Seeded random stream (numpy PCG64).

    The same seed always yields the same draw sequence, which is what makes
    whole optimizer runs replayable.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def permutation(self, n):
        return self._gen.permutation(n)


@dataclass
class Individual:
    x: np.ndarray
    fitness: float = UNEVALUATED


@dataclass
class Budget:
    max_fes: int
    fes: int = 0

    def __post_init__(self):
        if self.max_fes < 1:
            raise ConfigurationError("max_fes must be positive")

    @property
    def exhausted(self) -> bool:
        return self.fes >= self.max_fes

    @property
    def fraction(self) -> float:
        return self.fes / self.max_fes

    def consume(self) -> None:
        if self.fes >= self.max_fes:
            raise BudgetExhausted(f"budget of {self.max_fes} evaluations used up")
        self.fes += 1


@dataclass
class Population:
    """N positions (rows of ``X``) with cached fitness and the best-so-far.

    ``trace``, when not None, collects best_f after every evaluation.
    """

    X: np.ndarray
    fitness: np.ndarray
    best_x: np.ndarray | None = None
    best_f: float = math.inf
    trace: list | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.X.shape[0]

    def __len__(self):
        return self.X.shape[0]

    @property
    def members(self) -> list[Individual]:
        return [Individual(self.X[i].copy(), float(self.fitness[i])) for i in range(len(self))]

    def offer(self, x: np.ndarray, f: float) -> bool:
        """Record an evaluated point; True iff it became the new best."""
        improved = f < self.best_f
        if improved:
            self.best_f = float(f)
            self.best_x = np.array(x, dtype=float, copy=True)
        if self.trace is not None:
            self.trace.append(self.best_f)
        return improved


def init_population(space: SearchSpace, n: int, rng: RngStream) -> Population:
    if n < 2:
        raise ConfigurationError("population size must be >= 2")
    u = rng.random((n, space.dim))
    X = space.lb + u * space.width
    if space._has_int:
        X = np.array([clamp_to_bounds(row, space) for row in X])
    return Population(X=X, fitness=np.full(n, UNEVALUATED))


def evaluate(ind: Individual, problem, budget: Budget, pop: Population | None = None) -> float:
    """Evaluate one point, charging exactly one unit of budget."""
    budget.consume()
    f = float(problem(ind.x))
    ind.fitness = f
    if pop is not None:
        pop.offer(ind.x, f)
    return f


@dataclass
class RunResult:
    """Outcome of one optimizer run.

    ``curve[k]`` is the best-so-far after outer iteration ``k`` and
    ``curve_fes[k]`` the number of evaluations consumed at that point.
    """

    best_x: np.ndarray
    best_f: float
    curve: list[float]
    curve_fes: list[int]
    fes: int
    trace: list[float] | None = None

    def __iter__(self):
        # unpacks as (best_x, best_f, curve)
        return iter((self.best_x, self.best_f, self.curve))
