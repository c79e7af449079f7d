"""Objective functions: analytic test suite, constrained engineering designs
and loading of externally supplied shifted/rotated benchmark data.

A :class:`Problem` is callable and returns the penalized fitness. The raw
objective and the constraint vector (``g_k(x) <= 0`` convention) are available
through :meth:`Problem.evaluate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core import ConfigurationError, SearchSpace

_EMPTY = np.zeros(0)


class DataFormatError(ValueError):
    """Benchmark data file missing or of the wrong shape."""


class UnsupportedFunction(ValueError):
    """Function id has no base-function implementation (hybrid/composition)."""


@dataclass(frozen=True)
class PenaltyPolicy:
    coefficient: float = 1e6
    exponent: float = 2.0

    def __post_init__(self):
        if self.coefficient <= 0 or self.exponent <= 0:
            raise ConfigurationError("penalty coefficient and exponent must be positive")


def penalize(raw: float, constraints, policy: PenaltyPolicy = PenaltyPolicy()) -> float:
    g = np.asarray(constraints, dtype=float)
    viol = np.maximum(g, 0.0)
    if not viol.any():
        return float(raw)
    return float(raw + policy.coefficient * np.sum(viol**policy.exponent))


@dataclass
class Problem:
    """``func(x)`` returns ``(objective, constraints)``."""

    name: str
    space: SearchSpace
    func: Callable[[np.ndarray], tuple[float, np.ndarray]]
    penalty: PenaltyPolicy = field(default_factory=PenaltyPolicy)
    optimum: float | None = None
    optimum_x: np.ndarray | None = None

    def evaluate(self, x) -> tuple[float, np.ndarray]:
        return self.func(np.asarray(x, dtype=float))

    def raw(self, x) -> float:
        return float(self.evaluate(x)[0])

    def constraints(self, x) -> np.ndarray:
        return np.asarray(self.evaluate(x)[1], dtype=float)

    def is_feasible(self, x, tol: float = 0.0) -> bool:
        g = self.constraints(x)
        return bool(np.all(g <= tol))

    def __call__(self, x) -> float:
        f, g = self.func(np.asarray(x, dtype=float))
        if len(g) == 0:
            return float(f)
        return penalize(f, g, self.penalty)


# analytic suite ------------------------------------------------------------

def sphere(x):
    return float(np.dot(x, x))


def rosenbrock(x):
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def ackley(x):
    d = x.size
    a = -20.0 * math.exp(-0.2 * math.sqrt(float(np.dot(x, x)) / d))
    b = -math.exp(float(np.sum(np.cos(2.0 * np.pi * x))) / d)
    return a + b + 20.0 + math.e


def griewank(x):
    i = np.arange(1, x.size + 1)
    return float(np.dot(x, x) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


def zakharov(x):
    i = np.arange(1, x.size + 1)
    s = float(np.dot(0.5 * i, x))
    return float(np.dot(x, x)) + s**2 + s**4


def levy(x):
    w = 1.0 + (x - 1.0) / 4.0
    head = math.sin(math.pi * w[0]) ** 2
    mid = np.sum((w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[:-1] + 1.0) ** 2))
    tail = (w[-1] - 1.0) ** 2 * (1.0 + math.sin(2.0 * math.pi * w[-1]) ** 2)
    return float(head + mid + tail)


def bent_cigar(x):
    return float(x[0] ** 2 + 1e6 * np.dot(x[1:], x[1:]))


def schwefel(x):
    """Modified Schwefel as used by the CEC2017 suite, minimum 0 at x = 0."""
    z = x + 420.9687462275036
    out = np.empty_like(z)
    inside = np.abs(z) <= 500.0
    out[inside] = z[inside] * np.sin(np.sqrt(np.abs(z[inside])))
    hi = z > 500.0
    m = 500.0 - np.fmod(z[hi], 500.0)
    out[hi] = m * np.sin(np.sqrt(np.abs(m))) - (z[hi] - 500.0) ** 2 / (10000.0 * z.size)
    lo = z < -500.0
    m = np.fmod(np.abs(z[lo]), 500.0) - 500.0
    out[lo] = m * np.sin(np.sqrt(np.abs(m))) - (z[lo] + 500.0) ** 2 / (10000.0 * z.size)
    return float(418.9828872724338 * z.size - np.sum(out))


# name -> (function, low, high, minimizer value)
ANALYTIC = {
    "sphere": (sphere, -100.0, 100.0, 0.0),
    "rosenbrock": (rosenbrock, -30.0, 30.0, 1.0),
    "rastrigin": (rastrigin, -5.12, 5.12, 0.0),
    "ackley": (ackley, -32.768, 32.768, 0.0),
    "griewank": (griewank, -600.0, 600.0, 0.0),
    "zakharov": (zakharov, -5.0, 10.0, 0.0),
    "levy": (levy, -10.0, 10.0, 1.0),
}


def _unconstrained(fn):
    return lambda x: (fn(x), _EMPTY)


def analytic_problem(name: str, dim: int) -> Problem:
    try:
        fn, lo, hi, xstar = ANALYTIC[name]
    except KeyError:
        raise ConfigurationError(f"unknown analytic function {name!r}") from None
    if dim < 1 or (name == "rosenbrock" and dim < 2):
        raise ConfigurationError(f"invalid dimension {dim} for {name}")
    return Problem(
        name=f"{name}:{dim}",
        space=SearchSpace.box(dim, lo, hi),
        func=_unconstrained(fn),
        optimum=0.0,
        optimum_x=np.full(dim, xstar),
    )


def analytic_suite(dim: int = 10) -> list[Problem]:
    return [analytic_problem(name, dim) for name in ANALYTIC]


def constant_problem(value: float = 7.0, dim: int = 2) -> Problem:
    return Problem(f"constant:{dim}", SearchSpace.box(dim, -1.0, 1.0), lambda x: (value, _EMPTY))


# engineering designs -------------------------------------------------------

def pvd(x) -> tuple[float, np.ndarray]:
    """Pressure vessel. ``x = (z1, z2, x3, x4)``: shell and head thickness,
    inner radius, cylinder length."""
    z1, z2, x3, x4 = x
    f = 1.7781 * z2 * x3**2 + 0.6224 * z1 * x3 * x4 + 3.1661 * z1**2 * x4 + 19.84 * z1**2 * x3
    g = np.array([
        0.0193 * x3 - z1,
        0.00954 * x3 - z2,
        x4 - 240.0,
        1296000.0 - math.pi * x3**2 * x4 - 4.0 / 3.0 * math.pi * x3**3,
    ])
    return float(f), g


PVD_THICKNESS_STEP = 0.0625


def pvd_problem(discrete: bool = False, penalty: PenaltyPolicy | None = None) -> Problem:
    """Continuous thicknesses by default; ``discrete=True`` snaps them to
    multiples of 0.0625 in."""
    step = PVD_THICKNESS_STEP
    space = SearchSpace(
        lb=[step * 1, step * 1, 10.0, 10.0],
        ub=[step * 99, step * 99, 200.0, 200.0],
        integer_mask=[discrete, discrete, False, False],
        grid=[step, step, 1.0, 1.0],
    )
    return Problem("pvd-discrete" if discrete else "pvd", space, pvd,
                   penalty or ENGINEERING_PENALTY)


TTD_H, TTD_P, TTD_SIGMA = 100.0, 2.0, 2.0
TTD_LOWER = 1e-6
_SQ2 = math.sqrt(2.0)


def ttd(x) -> tuple[float, np.ndarray]:
    """Three-bar truss: volume with two stress constraints and one on bar 3."""
    x1, x2 = x
    f = (2.0 * _SQ2 * x1 + x2) * TTD_H
    den = _SQ2 * x1**2 + 2.0 * x1 * x2
    den3 = x1 + _SQ2 * x2
    if den <= 0.0 or den3 <= 0.0:
        return float(f), np.full(3, np.inf)
    g = np.array([
        TTD_P * (_SQ2 * x1 + x2) / den - TTD_SIGMA,
        TTD_P * x2 / den - TTD_SIGMA,
        TTD_P / den3 - TTD_SIGMA,
    ])
    return float(f), g


def ttd_problem(penalty: PenaltyPolicy | None = None) -> Problem:
    return Problem("ttd", SearchSpace([TTD_LOWER, TTD_LOWER], [1.0, 1.0]), ttd,
                   penalty or ENGINEERING_PENALTY)


WBD_P, WBD_L = 6000.0, 14.0
WBD_E, WBD_G = 30e6, 12e6
WBD_TAU_MAX, WBD_SIGMA_MAX, WBD_DELTA_MAX = 13600.0, 30000.0, 0.25


def wbd_terms(x) -> dict[str, float]:
    """Shear stress, bending stress, deflection and buckling load."""
    x1, x2, x3, x4 = x
    P, L, E, G = WBD_P, WBD_L, WBD_E, WBD_G
    root = math.sqrt(2.0 * x1 * x2)
    tau_p = P / root
    M = P * (L + x2 / 2.0)
    R = math.sqrt(x2**2 / 4.0 + (x1 + x3) ** 2 / 4.0)
    J = 2.0 * (root * (x2**2 / 12.0 + (x1 + x3) ** 2 / 4.0))
    tau_pp = M * R / J
    tau = math.sqrt(tau_p**2 + 2.0 * tau_p * tau_pp * x2 / (2.0 * R) + tau_pp**2)
    sigma = 6.0 * P * L / (x4 * x3**2)
    delta = 4.0 * P * L**3 / (E * x3**3 * x4)
    pc = (4.013 * E * math.sqrt(x3**2 * x4**6 / 36.0) / L**2
          * (1.0 - x3 / (2.0 * L) * math.sqrt(E / (4.0 * G))))
    return {"tau": tau, "sigma": sigma, "delta": delta, "pc": pc}


def wbd(x) -> tuple[float, np.ndarray]:
    """Welded beam fabrication cost, ``x = (h, l, t, b)``."""
    x1, x2, x3, x4 = x
    t = wbd_terms(x)
    f = 1.10471 * x1**2 * x2 + 0.04811 * x3 * x4 * (14.0 + x2)
    g = np.array([
        t["tau"] - WBD_TAU_MAX,
        t["sigma"] - WBD_SIGMA_MAX,
        x1 - x4,
        0.10471 * x1**2 + 0.04811 * x3 * x4 * (14.0 + x2) - 5.0,
        0.125 - x1,
        t["delta"] - WBD_DELTA_MAX,
        WBD_P - t["pc"],
    ])
    return float(f), g


def wbd_problem(penalty: PenaltyPolicy | None = None) -> Problem:
    return Problem("wbd", SearchSpace([0.1, 0.1, 0.1, 0.1], [2.0, 10.0, 10.0, 2.0]), wbd,
                   penalty or ENGINEERING_PENALTY)


# Linear (exact) penalty: with a quadratic one the penalized minimum sits a
# multiplier-sized distance outside the feasible set.
ENGINEERING_PENALTY = PenaltyPolicy(coefficient=1e6, exponent=1.0)


# externally supplied shifted/rotated data ---------------------------------

def _cec_rosenbrock(z):
    return rosenbrock(0.02048 * z + 1.0)


def _cec_rastrigin(z):
    return rastrigin(0.0512 * z)


def _cec_schwefel(z):
    return schwefel(10.0 * z)


def _cec_levy(z):
    return levy(z + 1.0)


# base functions in z-space (minimum 0 at z = 0); input scalings follow the
# reference CEC definitions
CEC_BASE = {
    "bent_cigar": bent_cigar,
    "zakharov": zakharov,
    "rosenbrock": _cec_rosenbrock,
    "rastrigin": _cec_rastrigin,
    "levy": _cec_levy,
    "schwefel": _cec_schwefel,
}

# suite -> function id -> (base function, bias)
CEC_SUITES = {
    "cec2017": {1: ("bent_cigar", 100.0), 3: ("zakharov", 300.0), 4: ("rosenbrock", 400.0),
                5: ("rastrigin", 500.0), 9: ("levy", 900.0), 10: ("schwefel", 1000.0)},
    "cec2022": {1: ("zakharov", 300.0), 2: ("rosenbrock", 400.0), 5: ("levy", 900.0)},
}


@dataclass
class CecDataBundle:
    shift: np.ndarray
    rotation: np.ndarray
    shuffle: np.ndarray | None = None


def _read_matrix(path: Path) -> np.ndarray:
    if not path.is_file():
        raise DataFormatError(f"missing data file: {path}")
    try:
        rows = [line.split() for line in path.read_text().splitlines() if line.strip()]
        return [np.array([float(v) for v in r]) for r in rows]
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric entry ({exc})") from None


def read_cec_bundle(path, function_id: int, dim: int) -> CecDataBundle:
    """Read ``shift_data_<id>.txt`` (first row, at least ``dim`` values) and
    ``M_<id>_D<dim>.txt`` (``dim`` rows of ``dim`` values) from ``path``.
    ``shuffle_data_<id>_D<dim>.txt`` is read when present."""
    path = Path(path)
    shift_file = path / f"shift_data_{function_id}.txt"
    rot_file = path / f"M_{function_id}_D{dim}.txt"
    rows = _read_matrix(shift_file)
    if not rows or rows[0].size < dim:
        raise DataFormatError(f"{shift_file}: expected a first row of at least {dim} reals")
    shift = rows[0][:dim]
    rows = _read_matrix(rot_file)
    if len(rows) < dim or any(r.size != dim for r in rows[:dim]):
        raise DataFormatError(f"{rot_file}: expected {dim} rows of {dim} reals")
    rotation = np.vstack(rows[:dim])
    shuffle = None
    shuf_file = path / f"shuffle_data_{function_id}_D{dim}.txt"
    if shuf_file.is_file():
        vals = np.concatenate(_read_matrix(shuf_file))
        if vals.size != dim:
            raise DataFormatError(f"{shuf_file}: expected {dim} integers")
        shuffle = vals.astype(int)
    return CecDataBundle(shift, rotation, shuffle)


def shifted_rotated(base: Callable, shift: np.ndarray, rotation: np.ndarray,
                    bias: float = 0.0) -> Callable:
    def f(x):
        return base(rotation @ (x - shift)) + bias
    return f


def load_cec_bundle(path, function_id: int, dim: int, suite: str = "cec2017") -> Problem:
    if suite not in CEC_SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {sorted(CEC_SUITES)}")
    entry = CEC_SUITES[suite].get(function_id)
    if entry is None:
        raise UnsupportedFunction(
            f"{suite} F{function_id} is not supported; available ids: {sorted(CEC_SUITES[suite])}")
    base_name, bias = entry
    data = read_cec_bundle(path, function_id, dim)
    fn = shifted_rotated(CEC_BASE[base_name], data.shift, data.rotation, bias)
    return Problem(
        name=f"{suite}:F{function_id}:{dim}",
        space=SearchSpace.box(dim, -100.0, 100.0),
        func=_unconstrained(fn),
        optimum=bias,
        optimum_x=data.shift.copy(),
    )


# registry -----------------------------------------------------------------

ENGINEERING = {"pvd": pvd_problem, "pvd-discrete": lambda: pvd_problem(discrete=True),
               "ttd": ttd_problem, "wbd": wbd_problem}


def get_problem(name: str, cec_data=None) -> Problem:
    """Resolve ``pvd``, ``ttd``, ``wbd``, ``sphere:30``, ``constant:2`` or
    ``cec2017:F1:10`` (needs ``cec_data``, a directory)."""
    name = name.strip()
    if name in ENGINEERING:
        return ENGINEERING[name]()
    parts = name.split(":")
    if parts[0] in CEC_SUITES:
        if len(parts) != 3 or not parts[1].upper().startswith("F"):
            raise ConfigurationError(f"expected '<suite>:F<id>:<dim>', got {name!r}")
        if cec_data is None:
            raise DataFormatError(f"{name}: no benchmark data directory given (cec_data)")
        try:
            fid, dim = int(parts[1][1:]), int(parts[2])
        except ValueError:
            raise ConfigurationError(f"bad id/dimension in {name!r}") from None
        return load_cec_bundle(cec_data, fid, dim, suite=parts[0])
    base = parts[0]
    if base not in ANALYTIC and base != "constant":
        raise ConfigurationError(f"unknown problem {name!r}")
    try:
        dim = int(parts[1]) if len(parts) > 1 else 10
    except ValueError:
        raise ConfigurationError(f"bad dimension in {name!r}") from None
    if base == "constant":
        return constant_problem(dim=dim)
    return analytic_problem(base, dim)


def problem_names() -> list[str]:
    return (list(ENGINEERING) + [f"{n}:<dim>" for n in ANALYTIC] + ["constant:<dim>"]
            + [f"{s}:F<id>:<dim>" for s in CEC_SUITES])
