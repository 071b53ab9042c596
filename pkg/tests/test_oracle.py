import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairfront import JointModel
from fairfront.errors import OracleCapError
from fairfront.fairness import Thresholds, accuracy, max_eo_violation
from fairfront.oracle import (
    bayes_accuracy,
    brute_force_deterministic,
    brute_force_randomized,
    classifier_to_transition,
    exact_frontier,
)
from fairfront.synthetic import independent_instance, random_instance

from .conftest import random_stochastic


@pytest.mark.parametrize("alpha, expected", [(0.0, 0.6), (0.05, 0.625), (0.2, 0.7), (1.0, 0.7)])
def test_exact_hand_values(hand_jm, alpha, expected):
    res = exact_frontier(hand_jm, Thresholds(eo=alpha))
    assert res.value == pytest.approx(expected, abs=1e-9)


def test_hand_brute_force(hand_jm):
    assert brute_force_deterministic(hand_jm, Thresholds(eo=0.0)) == pytest.approx(0.6, abs=1e-12)
    assert brute_force_deterministic(hand_jm, Thresholds(eo=0.05)) == pytest.approx(0.615, abs=1e-12)
    assert brute_force_randomized(hand_jm, Thresholds(eo=0.05), step=0.1) == pytest.approx(0.623, abs=1e-12)
    assert brute_force_randomized(hand_jm, Thresholds(eo=0.05), step=0.05) == pytest.approx(0.625, abs=1e-12)


def test_hand_bayes(hand_jm):
    assert bayes_accuracy(hand_jm) == pytest.approx(0.7, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_randomized_grid_approaches_exact(seed):
    jm = random_instance(seed, D=3)
    th = Thresholds(eo=0.05)
    ex = exact_frontier(jm, th).value
    grid = brute_force_randomized(jm, th, step=0.1)
    assert grid <= ex + 1e-9
    assert ex - grid <= 2e-2


@pytest.mark.parametrize("seed", range(6))
def test_certificate_is_consistent(seed):
    jm = random_instance(seed, D=5)
    th = Thresholds(sp=0.1, eo=0.05, oae=0.1)
    res = exact_frontier(jm, th)
    assert np.all(res.M >= -1e-9)
    np.testing.assert_allclose(res.M.sum(axis=1), 1, atol=1e-8)
    np.testing.assert_allclose(res.P, jm.phi @ res.M, atol=1e-12)
    assert res.value == pytest.approx(accuracy(jm.mu, res.P), abs=1e-12)
    assert max_eo_violation(res.P) <= 0.05 + 1e-8


def test_bayes_deterministic_labels():
    # feature value x determines the label exactly
    mu = np.array([0.2, 0.3, 0.25, 0.25])
    phi = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)
    jm = JointModel.from_arrays(mu, phi, 2, 2)
    assert bayes_accuracy(jm) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_independence_gives_label_marginal(seed):
    jm = independent_instance(seed)
    target = jm.label_marginal.max()
    assert bayes_accuracy(jm) == pytest.approx(target, abs=1e-12)
    # with identical rows every achievable P has equal rows, so SP and EO never bind
    for a in (0.0, 0.1, 1.0):
        assert exact_frontier(jm, Thresholds(sp=a, eo=a)).value == pytest.approx(target, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_bayes_matches_brute_force(seed):
    jm = random_instance(seed, D=3)
    unconstrained = Thresholds()
    assert bayes_accuracy(jm) == pytest.approx(brute_force_deterministic(jm, unconstrained), abs=1e-12)
    assert exact_frontier(jm, unconstrained).value == pytest.approx(bayes_accuracy(jm), abs=1e-8)


def test_classifier_to_transition():
    phi = np.array([[0.5, 0.5], [1.0, 0.0]])
    assert np.allclose(classifier_to_transition(np.eye(2), phi), phi)
    assert np.allclose(classifier_to_transition([[1, 0], [1, 0]], phi), [[1, 0], [1, 0]])
    with pytest.raises(ValueError):
        classifier_to_transition(np.eye(3), phi)


def test_caps(hand_jm):
    with pytest.raises(OracleCapError):
        exact_frontier(hand_jm, Thresholds(), cap=10)
    big = random_instance(0, D=21)
    with pytest.raises(OracleCapError):
        brute_force_deterministic(big, Thresholds())
    with pytest.raises(ValueError):
        brute_force_randomized(hand_jm, Thresholds(), step=0.3)


def test_constant_classifiers_keep_eo_feasible(hand_jm):
    # a constant prediction has identical rows, so EO = 0 always admits it
    best = brute_force_deterministic(hand_jm, Thresholds(eo=0.0))
    assert best >= hand_jm.label_marginal.max() - 1e-12


def test_overall_accuracy_equality_can_bind_without_information():
    jm = independent_instance(0)
    assert exact_frontier(jm, Thresholds(oae=0.0)).value < jm.label_marginal.max() - 1e-3


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), D=st.integers(2, 6))
def test_frontier_monotone_and_concave(seed, D):
    jm = random_instance(seed, D=D)
    grid = np.linspace(0, 0.2, 5)
    v = np.array([exact_frontier(jm, Thresholds(eo=a)).value for a in grid])
    assert np.all(np.diff(v) >= -1e-8)
    assert np.all(v[1:-1] >= (v[:-2] + v[2:]) / 2 - 1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_any_classifier_is_dominated(seed):
    jm = random_instance(seed, D=4)
    rng = np.random.default_rng(seed)
    P = jm.phi @ random_stochastic(rng, 4, 2)
    th = Thresholds(eo=max_eo_violation(P))
    assert accuracy(jm.mu, P) <= exact_frontier(jm, th).value + 1e-8
