import math
import warnings

import numpy as np
import pytest

from vtsearch.estimation import (
    GUARANTEE,
    AdversarialBackend,
    EstimateParams,
    PhaseEstimationBackend,
    PromiseWarning,
    bound_holds,
    default_reps,
    est_amp,
    estimate,
    median_est_amp,
    outcome_distribution,
    stop_condition,
)
from vtsearch.model import CostMeter

BACKENDS = [PhaseEstimationBackend(), AdversarialBackend()]


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_zero_is_deterministic(backend):
    rng = np.random.default_rng(0)
    for M in (1, 2, 8, 1000):
        assert est_amp(0.0, M, rng, backend) == 0.0


def test_exact_phase_cases():
    rng = np.random.default_rng(1)
    eps = math.sin(math.pi / 8) ** 2
    assert np.allclose(est_amp(eps, 8, rng, size=200), eps, atol=1e-12)
    assert np.allclose(est_amp(1.0, 4, rng, size=200), 1.0, atol=1e-12)


def test_distribution_normalised_and_on_grid():
    values, probs = outcome_distribution(0.3, 32)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(values, np.sin(np.pi * np.arange(32) / 32) ** 2)


def test_windowed_sampler_matches_exact_law():
    # M above the table threshold uses the windowed sampler
    eps, M, n = 0.137, 1024, 200_000
    draws = PhaseEstimationBackend().sample(eps, M, np.random.default_rng(2), size=n)
    values, probs = outcome_distribution(eps, M)
    law: dict = {}
    for v, p in zip(np.round(values, 12), probs):
        law[v] = law.get(v, 0.0) + p
    keys = np.array(sorted(law))
    expected = np.array([law[k] for k in keys])
    idx = np.searchsorted(keys, np.round(draws, 12))
    observed = np.bincount(idx, minlength=keys.size) / n
    assert 0.5 * np.abs(observed - expected).sum() < 0.01


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_backend_meets_guarantee(backend):
    rng = np.random.default_rng(3)
    for eps in (0.05, 0.4):
        draws = backend.sample(eps, 64, rng, size=20_000)
        freq = bound_holds(eps, draws, 64).mean()
        sigma = math.sqrt(GUARANTEE * (1 - GUARANTEE) / draws.size)
        assert freq >= GUARANTEE - 3 * sigma


def test_median_examples():
    rng = np.random.default_rng(4)
    assert median_est_amp(0.0, 16, 5, rng) == 0.0
    hits = sum(bound_holds(0.25, median_est_amp(0.25, 64, 15, rng), 64) for _ in range(10_000))
    assert hits / 10_000 >= 0.99
    with pytest.raises(ValueError):
        median_est_amp(0.25, 8, 4, rng)


def test_reps_formula():
    assert default_reps(5, 1 / 64) == 2 * 5 + 2 * 3 + 1
    assert default_reps(3, 1 / 1024) == 2 * 3 + 2 * 4 + 1
    assert EstimateParams(0.5, 1 / 64, 5).reps % 2 == 1


def test_params_validation():
    with pytest.raises(ValueError):
        EstimateParams(1.0, 0.1, 3)
    with pytest.raises(ValueError):
        EstimateParams(0.5, 0.0, 3)
    with pytest.raises(ValueError):
        EstimateParams(0.5, 0.1, 0)


def test_stop_condition_example():
    # 2 pi sqrt(0.1875)/64 + pi^2/4096 is about 0.0449 <= 0.125
    assert stop_condition(0.25, 64, 0.5)
    assert not stop_condition(0.0, 64, 0.5)


def test_estimate_zero_exhausts_loop():
    params = EstimateParams(0.5, 1 / 64, 3)
    meter = CostMeter()
    res = estimate(0.0, params, meter, np.random.default_rng(5))
    assert res.value == 0.0
    assert res.final_m <= params.m_max
    assert res.evaluations <= 2 * params.m_max * params.reps
    assert meter.total == res.evaluations
    # geometric sum of the rounds
    assert res.evaluations == sum(M for M, _ in res.trace) * params.reps < 2 * res.final_m * params.reps


def test_estimate_cost_per_eval_charged():
    meter = CostMeter()
    res = estimate(0.25, EstimateParams(0.5, 1 / 64, 3), meter, np.random.default_rng(6), cost_per_eval=7)
    assert meter.total == 7 * res.evaluations


def test_estimate_relative_error_frequency():
    params = EstimateParams(0.5, 1 / 64, 5)
    rng = np.random.default_rng(7)
    vals = np.array([estimate(0.25, params, CostMeter(), rng).value for _ in range(2000)])
    assert np.mean(np.abs(0.25 - vals) < 0.5 * vals) >= 1 - 2 ** -5
    assert vals.min() >= 0 and vals.max() <= 1


def test_stop_condition_sound_past_threshold():
    rng = np.random.default_rng(8)
    for _ in range(300):
        c = rng.uniform(0.05, 0.95)
        eps = rng.uniform(1e-3, 0.99)
        M = 2 ** math.ceil(math.log2(4 * math.pi / (c * math.sqrt((1 - c) * eps))))
        grid = np.sin(np.pi * np.arange(M // 2 + 1) / M) ** 2
        accurate = grid[bound_holds(eps, grid, M)]
        assert all(stop_condition(float(e), M, c) for e in accurate)


def test_promise_violation_warns():
    with pytest.warns(PromiseWarning):
        res = estimate(1e-4, EstimateParams(0.5, 1 / 64, 3), CostMeter(), np.random.default_rng(9))
    assert res.promise_violated
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate(0.5, EstimateParams(0.5, 1 / 64, 3), CostMeter(), np.random.default_rng(9))
