import math

import numpy as np
import pytest

from vtsearch.calculus import (
    ProbInterval,
    aa_lower_bound,
    admissible,
    amplified_interval,
    amplify_exact,
    best_rounds,
    choose_m,
    exact_grover_prob,
    exact_grover_schedule,
    max_rounds,
    monotone_pair,
    reps_for,
    success_angle,
)


def test_amplify_identity_and_forced():
    assert amplify_exact(0.37, 0) == pytest.approx(0.37, abs=1e-15)
    assert amplify_exact(0.25, 1) == pytest.approx(1.0, abs=1e-12)


def test_amplify_direct_value():
    # sin^2(5 asin 0.1) evaluated independently
    expected = math.sin(5 * math.asin(0.1)) ** 2
    assert amplify_exact(0.01, 2) == pytest.approx(expected, abs=1e-15)
    assert amplify_exact(0.01, 2) == pytest.approx(0.2305536256, abs=1e-10)


def test_amplify_vectorised_matches_scalar():
    d = np.linspace(0, 1, 11)
    vec = amplify_exact(d, 3)
    assert np.allclose(vec, [amplify_exact(float(x), 3) for x in d], atol=1e-15)


def test_success_angle_roundtrip():
    d = np.random.default_rng(0).random(1000)
    assert np.allclose(np.sin(success_angle(d)) ** 2, d, atol=1e-12)


def test_lower_bound_examples():
    assert aa_lower_bound(0.01, 2) == pytest.approx(0.2291666666666, abs=1e-12)
    assert amplify_exact(0.01, 2) >= aa_lower_bound(0.01, 2)
    for d in (0.0, 0.1, 0.5, 0.9):
        assert aa_lower_bound(d, 0) == pytest.approx((1 - d / 3) * d)
        assert aa_lower_bound(d, 0) <= d
    assert aa_lower_bound(0.0, 7) == 0.0


def test_lower_bound_rejects_overshoot():
    with pytest.raises(ValueError):
        aa_lower_bound(0.5, 1)


def test_max_rounds_is_admissible_boundary():
    for eps in (0.001, 0.01, 0.1, 0.25, 0.3):
        m = max_rounds(eps)
        assert admissible(eps, m)
        assert not admissible(eps, m + 1)


def test_choose_m_examples():
    n = 2 ** 10
    assert choose_m(0.001, n) == 2
    assert choose_m(1 / (36 * 10), n) == 1
    p = 1 / (9.01 * 10)
    assert choose_m(p, n) == 1 and 9 * p <= 1 / 10
    with pytest.raises(ValueError):
        choose_m(1 / 90, n)


def test_choose_m_lands_in_window():
    rng = np.random.default_rng(5)
    for _ in range(2000):
        n = int(rng.integers(2, 10 ** 6))
        log_n = math.log2(n)
        p = rng.uniform(1e-9, 1 / (9 * log_n)) * (1 - 1e-12)
        m = choose_m(p, n)
        v = (2 * m + 1) ** 2 * p
        assert 1 / (9 * log_n) <= v <= 1 / log_n * (1 + 1e-12)


def test_monotone_pair_examples():
    lo, hi = monotone_pair(0.02, 0.02, 3)
    assert lo == hi
    lo, hi = monotone_pair(0.01, 0.02, 2)
    assert lo <= hi <= 2 * lo
    lo, hi = monotone_pair(0.01, 0.03, 0)
    assert hi / lo == pytest.approx(3.0)


def test_amplified_interval_contains_samples():
    rng = np.random.default_rng(7)
    for _ in range(300):
        a, b = np.sort(rng.random(2))
        m = int(rng.integers(0, 6))
        lo, hi = amplified_interval(a, b, m)
        vals = amplify_exact(np.linspace(a, b, 200), m)
        assert lo <= vals.min() + 1e-12 and vals.max() <= hi + 1e-12


def test_best_rounds_exact_point():
    # 3 arcsin(1/2) = pi/2
    assert best_rounds(0.25) == (1, pytest.approx(1.0))
    m, worst = best_rounds(0.001, 0.002)
    scan = [min(amplify_exact(0.001, k), amplify_exact(0.002, k)) for k in range(40)]
    assert worst == pytest.approx(max(scan), abs=1e-12)


def test_reps_for():
    assert reps_for(0.5, 0.25) == 2
    assert reps_for(1.0, 1e-9) == 1
    assert (1 - 0.3) ** reps_for(0.3, 1e-4) <= 1e-4


def test_exact_grover_examples():
    assert exact_grover_prob(1, 1) == (1, 1.0)
    q, p = exact_grover_prob(4, 1)
    assert q == 2 and p == pytest.approx(1.0, abs=1e-12)
    assert exact_grover_prob(10, 0)[0] == 3
    assert exact_grover_prob(10, 1)[1] == pytest.approx(1.0, abs=1e-12)


def test_exact_grover_certain_up_to_1e4():
    for n in range(1, 10_001):
        q, p = exact_grover_prob(n, 1)
        k, _ = exact_grover_schedule(n)
        assert abs(p - 1.0) <= 1e-9
        assert k <= q


def test_prob_interval():
    iv = ProbInterval(0.01, 0.02)
    assert iv.d == pytest.approx(2.0)
    amp = iv.amplified(2)
    assert amp.lo == pytest.approx(amplify_exact(0.01, 2))
    assert amp.hi == pytest.approx(amplify_exact(0.02, 2))
    with pytest.raises(ValueError):
        ProbInterval(0.5, 0.4)
