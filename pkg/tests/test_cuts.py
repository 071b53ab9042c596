import itertools

import numpy as np
import pytest

from fairfront.cuts import (
    CcpConfig,
    ccp_descent,
    ccp_subproblem,
    dc_objective,
    find_violated_cut,
)
from fairfront.dist import posterior_g
from fairfront.lp import solve_lp
from fairfront.master import cut_violation
from fairfront.synthetic import independent_instance, random_instance

from .conftest import random_stochastic

IDENT = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=float)


def test_dc_objective_trivial(bayes_example):
    gt = posterior_g(bayes_example)
    P = random_stochastic(np.random.default_rng(0), 4, 2)
    assert dc_objective(np.zeros((3, 4)), gt.g, gt.px, bayes_example.mu, P) == 0
    assert dc_objective(np.ones((1, 4)), gt.g, gt.px, bayes_example.mu, P) == pytest.approx(0, abs=1e-15)


def test_dc_objective_hand(bayes_example):
    gt = posterior_g(bayes_example)
    a = np.array([[1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)
    # rhs 0.425 (see test_master); lhs: column 0 max(0.25, 0) + column 1 max(0, 0.25)
    assert dc_objective(a, gt.g, gt.px, bayes_example.mu, IDENT) == pytest.approx(0.425 - 0.5, abs=1e-15)


def test_single_piece_is_identically_zero(hand_jm):
    gt = posterior_g(hand_jm)
    rng = np.random.default_rng(2)
    P = random_stochastic(rng, 4, 2)
    a0 = rng.uniform(-1, 1, (1, 4))
    a, trace, _ = ccp_descent(a0, gt.g, gt.px, hand_jm.mu, P)
    assert len(trace) == 2  # one subproblem solve reaches the k=1 minimum
    assert abs(trace[-1]) <= 1e-12


def test_subproblem_shape_single_support_point():
    mu = np.array([0.1, 0.2, 0.3, 0.4])
    g = mu[None, :]
    lp = ccp_subproblem((0, 1), g, np.array([1.0]), mu, IDENT, k=3)
    assert lp.n == 3 * 4 + 1
    assert lp.m == 3


def _exact_dc_min(g, px, mu, P, k):
    """Global DC minimum: the objective equals the min over active-piece
    assignments of the corresponding convex surrogate's minimum."""
    C = P.shape[1]
    best = 0.0
    for sigma in itertools.product(range(k), repeat=C):
        sol = solve_lp(ccp_subproblem(sigma, g, px, mu, P, k))
        best = min(best, sol.value)
    return best


@pytest.mark.parametrize("seed", range(8))
def test_descent_is_monotone_and_reaches_global_min(seed):
    jm = random_instance(seed, D=4)
    gt = posterior_g(jm)
    rng = np.random.default_rng(seed)
    P = random_stochastic(rng, 4, 2)
    res = find_violated_cut(P, gt.g, gt.px, jm.mu, CcpConfig(k=3, restarts=8, seed=seed))
    for tr in res.traces:
        assert all(b <= a + 1e-9 for a, b in zip(tr, tr[1:]))
    assert res.value == pytest.approx(dc_objective(res.vectors, gt.g, gt.px, jm.mu, P), abs=1e-9)
    assert np.all(np.abs(res.vectors) <= 1 + 1e-12)
    assert res.value == pytest.approx(_exact_dc_min(gt.g, gt.px, jm.mu, P, 3), abs=1e-7)


@pytest.mark.parametrize("seed", range(6))
def test_achievable_point_is_not_cut(seed):
    jm = random_instance(seed, D=5)
    gt = posterior_g(jm)
    rng = np.random.default_rng(100 + seed)
    P = jm.phi @ random_stochastic(rng, jm.D, 2)
    for k in (1, 2, 3, 4):
        res = find_violated_cut(P, gt.g, gt.px, jm.mu, CcpConfig(k=k, restarts=6, seed=seed))
        assert not res.violated
        assert res.value >= -1e-7


def test_identity_is_cut_when_features_uninformative():
    jm = independent_instance(1)
    gt = posterior_g(jm)
    res = find_violated_cut(IDENT, gt.g, gt.px, jm.mu, CcpConfig(k=2, restarts=4))
    assert res.violated
    assert res.value < -0.1
    assert cut_violation(IDENT, res.cut, jm.mu) >= 1e-7 - 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_found_cuts_separate_without_removing_achievable_points(seed):
    jm = random_instance(seed, D=4)
    gt = posterior_g(jm)
    rng = np.random.default_rng(seed)
    res = find_violated_cut(IDENT, gt.g, gt.px, jm.mu, CcpConfig(k=4, restarts=6, seed=seed))
    if not res.violated:
        pytest.skip("identity transition is achievable on this instance")
    assert cut_violation(IDENT, res.cut, jm.mu) >= 1e-7 - 1e-9
    for _ in range(300):
        Q = jm.phi @ random_stochastic(rng, jm.D, 2)
        assert cut_violation(Q, res.cut, jm.mu) <= 1e-9


def test_deterministic_for_fixed_seed(hand_jm):
    gt = posterior_g(hand_jm)
    cfg = CcpConfig(k=4, restarts=5, seed=42)
    a = find_violated_cut(IDENT, gt.g, gt.px, hand_jm.mu, cfg)
    b = find_violated_cut(IDENT, gt.g, gt.px, hand_jm.mu, cfg)
    assert a.vectors.tobytes() == b.vectors.tobytes()
    assert a.traces == b.traces


@pytest.mark.parametrize("seed", range(4))
def test_best_value_non_increasing_in_k(seed):
    jm = random_instance(seed, D=5)
    gt = posterior_g(jm)
    vals = [
        find_violated_cut(IDENT, gt.g, gt.px, jm.mu, CcpConfig(k=k, restarts=8, seed=seed)).value
        for k in range(1, 5)
    ]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        CcpConfig(k=0)
    with pytest.raises(ValueError):
        CcpConfig(eps_stop=0)
