import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vdopt.core import ConfigurationError, Population, RngStream, SearchSpace
from vdopt.problems import analytic_problem, constant_problem
from vdopt.vdo import (
    BurstContext,
    LatencyArchive,
    VdoParams,
    budding_update,
    burst_context,
    burst_factor,
    burst_update,
    de_recombination,
    fusion_jump,
    latency_record,
    levy_reinfection,
    levy_vector,
    mantegna_sigma,
    mean_gradient,
    optimize,
    reactivate,
    receptor_count,
    replication_strength,
    step_early,
    step_late,
    tropism_filter,
    tropism_step,
)

WIDE = SearchSpace.box(1, -100.0, 100.0)
P = VdoParams()


def ctx(delta_g, beta_t=1.0, rho=None, r0=0.5):
    rho = beta_t if rho is None else rho
    return BurstContext(np.asarray(delta_g, float), beta_t, rho, r0)


# params --------------------------------------------------------------------

def test_defaults_validate():
    assert P.latency_depth == 10 and P.levy_beta == 1.5


@pytest.mark.parametrize("kw", [
    dict(tropism_min=0.6, tropism_max=0.5), dict(p_bud=1.5), dict(latency_depth=0),
    dict(levy_beta=2.0), dict(divide_num=0), dict(w0=0.0),
])
def test_invalid_params(kw):
    with pytest.raises(ConfigurationError):
        VdoParams(**kw)


# tropism -------------------------------------------------------------------

def test_filter_all_equal_to_best(scripted):
    X = np.zeros((5, 4))
    out = tropism_filter(X, np.zeros(4), VdoParams(divide_num=2), scripted(perm=[2, 0, 1, 3]))
    assert out.tolist() == [0, 1, 2, 3, 4]


def test_filter_hand_trace(scripted):
    X = np.array([[5.0, 0.0], [-5.0, 0.0]])
    out = tropism_filter(X, np.zeros(2), VdoParams(divide_num=2), scripted(perm=[0, 1]))
    assert out.tolist() == [0]


def test_receptor_count():
    assert receptor_count(10, 4) == 2
    assert receptor_count(3, 4) == 1


@settings(max_examples=300, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 8)),
              elements=st.floats(-3, 3).map(round)),
       st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_filter_nonempty_and_shrink_rule(X, divide_num, seed):
    best = X[0].copy()
    trace = []
    out = tropism_filter(X, best, VdoParams(divide_num=divide_num), RngStream(seed), trace)
    assert out.size >= 1
    assert len(trace) == receptor_count(X.shape[1], divide_num)
    for prev, kept, result in trace:
        keep_branch = kept.size >= 0.5 * prev.size and np.array_equal(result, kept)
        flip_branch = (kept.size < 0.5 * prev.size
                       and np.array_equal(result, np.setdiff1d(prev, kept)))
        assert keep_branch or flip_branch


def test_tropism_step_at_best_is_identity(scripted):
    x = np.array([1.0, -2.0])
    rng = scripted(uniforms=[0.5, 0.3, 0.9, 0.0, 0.0])
    assert tropism_step(x, x.copy(), SearchSpace.box(2, -5, 5), P, rng).tolist() == x.tolist()


def test_tropism_step_full_pull_reaches_best(scripted):
    params = VdoParams(tropism_min=1.0, tropism_max=1.0, eta=1.0)
    x, best = np.array([1.0, -2.0]), np.array([3.0, 0.5])
    rng = scripted(uniforms=[0.0, 1.0, 1.0, 0.5, 0.5])
    out = tropism_step(x, best, SearchSpace.box(2, -5, 5), params, rng)
    assert out.tolist() == best.tolist()


def test_tropism_step_eta_zero():
    x = np.array([0.3, 0.7])
    rng = RngStream(5)
    out = tropism_step(x, np.zeros(2), SearchSpace.box(2, 0, 1), VdoParams(eta=0.0), rng)
    assert out.tolist() == x.tolist()


# burst ---------------------------------------------------------------------

def test_mean_gradient_examples():
    X = np.array([[0.0, 0.0], [2.0, 2.0], [9.0, 9.0]])
    assert mean_gradient(X, [0, 1], np.array([1.0, 1.0])).tolist() == [0.0, 0.0]
    assert mean_gradient(np.array([[0.0]]), [0], np.array([3.0])).tolist() == [3.0]
    assert mean_gradient(np.ones((3, 2)), [0, 2], np.ones(2)).tolist() == [0.0, 0.0]


def test_mean_gradient_empty():
    with pytest.raises(ValueError):
        mean_gradient(np.ones((2, 2)), [], np.ones(2))


@pytest.mark.parametrize("fes, expected", [(0, 1.0), (100, 0.0), (50, 0.5)])
def test_burst_factor_points(fes, expected):
    assert burst_factor(fes, 100) == pytest.approx(expected, abs=1e-15)


def test_burst_factor_monotone_and_bounded():
    grid = np.linspace(0, 1000, 1000).round().astype(int)
    vals = [burst_factor(int(f), 1000) for f in grid]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(a >= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("w0, beta, expected", [(1, 1, 1), (2, 0.5, 1), (1, 0, 0)])
def test_replication_strength(w0, beta, expected):
    assert replication_strength(w0, beta) == expected


def test_step_early_examples(scripted):
    assert step_early(1.0, 1.0, scripted(uniforms=[0.5, 0.77])) == 0.0
    assert step_early(2.0, 1.0, scripted(uniforms=[1.0, 0.25])) == pytest.approx(1.0, abs=1e-15)
    assert step_early(2.0, 0.0, scripted(uniforms=[0.9, 0.1])) == 0.0


def test_step_late_examples(scripted):
    assert step_late(1.0, 1.0, 0.5, scripted(uniforms=[0.5])) == 0.0
    assert step_late(1.0, 1.0, 1e-12, scripted(uniforms=[1.0])) == pytest.approx(0.075, abs=1e-12)
    assert step_late(1.0, 0.0, 0.5, scripted(uniforms=[0.9])) == 0.0


def test_step_late_rejects_unclamped_r0(scripted):
    with pytest.raises(ValueError):
        step_late(1.0, 1.0, 1.0, scripted(uniforms=[0.3]))


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 5), st.floats(0, 1), st.floats(1e-3, 1 - 1e-3), st.floats(0, 1),
       st.floats(0, 1))
def test_step_bounds(rho, beta, r0, xi, xi2):
    from conftest import ScriptedRng
    late = step_late(rho, beta, r0, ScriptedRng(uniforms=[xi]))
    early = step_early(rho, beta, ScriptedRng(uniforms=[xi, xi2]))
    assert abs(late) <= 0.1 * rho * abs(xi - 0.5) * beta * 2 + 1e-12
    assert abs(early) <= rho * abs(xi - 0.5) * beta + 1e-12
    if beta == 0:
        assert late == 0 and early == 0


def test_burst_context_clamps_r0():
    X = np.zeros((4, 2))
    c = burst_context(X, [0, 1, 2, 3], np.ones(2), 0, 100, P)
    assert c.r0 == 1 - P.r0_eps and c.beta_t == 1.0 and c.rho == P.w0


def test_burst_update_closed_gates():
    x = np.array([1.0, 2.0])
    out = burst_update(x, ctx([5.0, 5.0]), SearchSpace.box(2, -10, 10), VdoParams(act_prob=0.0),
                       RngStream(1))
    assert out.tolist() == x.tolist()


def test_burst_update_zero_gradient():
    x = np.array([1.0, 2.0])
    assert burst_update(x, ctx([0.0, 0.0]), SearchSpace.box(2, -10, 10), P,
                        RngStream(2)).tolist() == x.tolist()


def test_burst_update_flipped_step(scripted):
    # mode=early, xi=1, xi'=0.25 -> s=1; gate open; flip
    rng = scripted(uniforms=[0.1, 1.0, 0.25, 0.0, 0.0])
    out = burst_update(np.array([0.0]), ctx([2.0], beta_t=1.0, rho=2.0), WIDE, P, rng)
    assert out[0] == pytest.approx(-2.0, abs=1e-14)


# diffusion -----------------------------------------------------------------

def test_budding_zero_gradient():
    x = np.array([0.4, -0.3])
    assert budding_update(x, ctx([0.0, 0.0]), SearchSpace.box(2, -1, 1), P,
                          RngStream(3)).tolist() == x.tolist()


def test_budding_zero_beta():
    x = np.array([0.4, -0.3])
    out = budding_update(x, ctx([1.0, 1.0], beta_t=0.0, rho=0.0), SearchSpace.box(2, -1, 1), P,
                         RngStream(4))
    assert out.tolist() == x.tolist()


def test_budding_forced_early(scripted):
    rng = scripted(uniforms=[0.1, 1.0, 0.25])
    out = budding_update(np.array([0.0]), ctx([3.0], beta_t=1.0, rho=2.0), WIDE, P, rng)
    assert out[0] == pytest.approx(3.0, abs=1e-14)


def test_fusion_copy_and_noop(scripted):
    x, best = np.array([1.0, 2.0]), np.array([-1.0, 0.5])
    space = SearchSpace.box(2, -5, 5)
    assert fusion_jump(x, best, ctx([1, 1]), space, scripted(uniforms=[0.9], ints=[1])).tolist() \
        == best.tolist()
    assert fusion_jump(x, best, ctx([1, 1]), space, scripted(uniforms=[0.9], ints=[0])).tolist() \
        == x.tolist()


def test_fusion_single_dimension_jump(scripted):
    x, best = np.array([1.0, 2.0]), np.array([-1.0, 0.5])
    out = fusion_jump(x, best, ctx([4, 4]), SearchSpace.box(2, -5, 5),
                      scripted(uniforms=[0.1, 0.5], ints=[1]))
    assert out.tolist() == [1.0, 0.5]


def test_levy_beta_two_rejected():
    with pytest.raises(ValueError):
        mantegna_sigma(2.0)


def test_levy_vector_length():
    assert levy_vector(3, 1.5, RngStream(0)).shape == (3,)


def test_levy_heavy_tail_against_normal_oracle():
    rng = RngStream(11)
    levy = np.abs(levy_vector(100_000, 1.5, rng))
    normal = np.abs(np.random.default_rng(12).standard_normal(100_000))
    assert np.percentile(levy, 99) > 3 * np.percentile(normal, 99)


def test_levy_reinfection_examples(scripted):
    space = SearchSpace.box(2, -10, 10)
    x, best = np.array([1.0, -1.0]), np.array([3.0, 2.0])
    assert levy_reinfection(best, best.copy(), space, P, RngStream(1)).tolist() == best.tolist()
    s = mantegna_sigma(P.levy_beta)
    ones = scripted(normals=[1 / s, 1 / s, 1.0, 1.0])
    assert np.allclose(levy_reinfection(x, best, space, P, ones), best, atol=1e-12)
    zeros = scripted(normals=[0.0, 0.0, 1.0, 1.0])
    assert levy_reinfection(x, best, space, P, zeros).tolist() == x.tolist()


def test_de_examples(scripted):
    X = np.arange(15, dtype=float).reshape(5, 3)
    space = SearchSpace.box(3, -100, 100)
    target = np.array([50.0, 50.0, 50.0])
    # picks a=2, b=3, c=4 then j_rand=0
    trial = de_recombination(X, 0, target, space, VdoParams(de_f=0.0, de_cr=1.0),
                             scripted(ints=[2, 3, 4, 0], uniforms=[0.5, 0.5, 0.5]))
    assert trial.tolist() == X[2].tolist()
    trial = de_recombination(X, 0, target, space, VdoParams(de_cr=0.0),
                             scripted(ints=[2, 3, 4, 1], uniforms=[0.5, 0.5, 0.5]))
    assert np.count_nonzero(trial != target) == 1 and trial[1] != target[1]
    X[4] = X[3]
    trial = de_recombination(X, 0, target, space, VdoParams(de_f=0.9, de_cr=1.0),
                             scripted(ints=[2, 3, 4, 0], uniforms=[0.5, 0.5, 0.5]))
    assert trial.tolist() == X[2].tolist()


def test_de_skips_small_population():
    X = np.zeros((3, 2))
    t = np.array([1.0, 1.0])
    assert de_recombination(X, 0, t, SearchSpace.box(2, -5, 5), P, RngStream(0)) is t


def test_de_picks_distinct():
    X = np.random.default_rng(0).normal(size=(4, 2))
    rng = RngStream(9)
    for _ in range(50):
        de_recombination(X, 1, X[1], SearchSpace.box(2, -9, 9), P, rng)


# latency -------------------------------------------------------------------

def test_archive_round_trip():
    a = LatencyArchive(2, 3, 4)
    a.rec = 3
    latency_record(a, 1, np.array([1.0, 2.0, 3.0]), 7.5)
    assert a.positions[1, :, 2].tolist() == [1.0, 2.0, 3.0] and a.costs[1, 2] == 7.5


def test_archive_depth_one_overwrites():
    a = LatencyArchive(1, 1, 1)
    latency_record(a, 0, np.array([1.0]), 1.0)
    latency_record(a, 0, np.array([2.0]), 2.0)
    assert a.positions[0, 0, 0] == 2.0 and a.costs[0, 0] == 2.0


def test_archive_fills_after_depth_iterations():
    a = LatencyArchive(1, 1, 3)
    for k in range(3):
        latency_record(a, 0, np.array([float(k)]), float(k))
        a.advance()
    assert a.filled.all() and a.full


def _pop_with(X, f, best_f):
    return Population(np.array(X, float), np.array(f, float), np.zeros(np.shape(X)[1]), best_f)


def test_reactivate_argmin():
    a = LatencyArchive(1, 1, 3)
    for k, c in enumerate([5.0, 3.0, 9.0]):
        latency_record(a, 0, np.array([10.0 * (k + 1)]), c)
        a.advance()
    pop = reactivate(_pop_with([[0.0]], [1.0], 0.0), a)
    assert pop.X[0, 0] == 20.0 and pop.fitness[0] == 3.0 and a.rec == 1


def test_reactivate_tie_takes_first_slot():
    a = LatencyArchive(1, 1, 3)
    for k in range(3):
        latency_record(a, 0, np.array([float(k)]), 4.0)
        a.advance()
    pop = reactivate(_pop_with([[9.0]], [4.0], 1.0), a)
    assert pop.X[0, 0] == 0.0


def test_reactivate_depth_one_restores_last_record():
    a = LatencyArchive(1, 2, 1)
    latency_record(a, 0, np.array([1.0, 2.0]), 6.0)
    a.advance()
    pop = reactivate(_pop_with([[0.0, 0.0]], [1.0], 0.5), a)
    assert pop.X[0].tolist() == [1.0, 2.0] and pop.fitness[0] == 6.0


def test_reactivate_requires_full_archive():
    with pytest.raises(ValueError):
        reactivate(_pop_with([[0.0]], [1.0], 0.0), LatencyArchive(1, 1, 2))


def test_reactivate_randomized_post_condition():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n, d, depth = rng.integers(1, 6), rng.integers(1, 4), rng.integers(1, 6)
        a = LatencyArchive(n, d, depth)
        costs = rng.integers(0, 5, size=(n, depth)).astype(float)
        for s in range(depth):
            for i in range(n):
                latency_record(a, i, rng.normal(size=d), costs[i, s])
            a.advance()
        pop = _pop_with(rng.normal(size=(n, d)), rng.normal(size=n), costs.min() - 1)
        reactivate(pop, a)
        for i in range(n):
            j = int(np.flatnonzero(costs[i] == costs[i].min())[0])
            assert pop.fitness[i] == costs[i].min()
            assert np.array_equal(pop.X[i], a.positions[i, :, j])


# full runs -----------------------------------------------------------------

def test_constant_objective():
    res = optimize(constant_problem(7.0), n=5, max_fes=200, seed=1)
    assert res.best_f == 7.0 and set(res.curve) == {7.0}


def test_seed_replay_identical():
    prob = analytic_problem("rastrigin", 5)
    a = optimize(prob, n=20, max_fes=3000, seed=77)
    b = optimize(prob, n=20, max_fes=3000, seed=77)
    assert a.curve == b.curve and np.array_equal(a.best_x, b.best_x)
    c = optimize(prob, n=20, max_fes=3000, seed=78)
    assert c.curve != a.curve


def test_sphere_10d_converges():
    res = optimize(analytic_problem("sphere", 10), n=50, max_fes=50_000, seed=3)
    assert res.best_f < 1e-4


@pytest.mark.parametrize("max_fes", [50, 51, 999, 1000])
def test_budget_exact(max_fes):
    res = optimize(analytic_problem("ackley", 3), n=50, max_fes=max_fes, seed=0)
    assert res.fes == max_fes
    if res.curve:
        assert res.curve_fes[-1] == max_fes


def test_rejects_small_budget():
    with pytest.raises(ConfigurationError):
        optimize(analytic_problem("sphere", 2), n=10, max_fes=5)


class Shadow:
    """Wraps a problem and logs every value it returns."""

    def __init__(self, prob):
        self.prob, self.space, self.log = prob, prob.space, []

    def __call__(self, x):
        f = self.prob(x)
        self.log.append(f)
        return f


@pytest.mark.parametrize("seed", [0, 1])
def test_run_invariants(seed):
    prob = Shadow(analytic_problem("griewank", 4))
    snapshots = []

    def observer(pop, it):
        snapshots.append((pop.X.copy(), pop.fitness.copy(), pop.best_f))

    res = optimize(prob, n=12, max_fes=2400, params=VdoParams(latency_depth=3), seed=seed,
                   dense=True, observer=observer)
    space = prob.space
    for X, _, _ in snapshots:
        assert np.all(X >= space.lb) and np.all(X <= space.ub)
    assert all(a >= b for a, b in zip(res.curve, res.curve[1:]))
    assert all(a >= b for a, b in zip(res.trace, res.trace[1:]))
    assert len(prob.log) == res.fes == 2400
    assert res.trace == list(np.minimum.accumulate(prob.log))
    assert res.best_f == min(prob.log)
    # cached fitness always belongs to the stored position
    X, f, _ = snapshots[-1]
    assert all(prob.prob(X[i]) == f[i] for i in range(len(f)))


def test_greedy_retention_without_reactivation():
    fits = []
    optimize(analytic_problem("rastrigin", 3), n=10, max_fes=1500,
             params=VdoParams(latency_depth=10_000), seed=4,
             observer=lambda pop, it: fits.append(pop.fitness.copy()))
    for before, after in zip(fits, fits[1:]):
        assert np.all(after <= before)
