"""Amplitude estimation: an Est-Amp sampler, median boosting and the doubling Estimate loop."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import CostMeter

GUARANTEE = 8 / math.pi ** 2


class PromiseWarning(UserWarning):
    """Estimate was called with 0 < epsilon < p_floor."""


def error_bound(epsilon, estimate, M):
    """Accuracy guaranteed (w.p. >= 8/pi^2) for an M-evaluation Est-Amp run."""
    eps = np.asarray(epsilon, dtype=float)
    est = np.asarray(estimate, dtype=float)
    var = np.maximum(eps * (1 - eps), est * (1 - est))
    out = 2 * math.pi * np.sqrt(var) / M + math.pi ** 2 / M ** 2
    return float(out) if out.ndim == 0 else out


def bound_holds(epsilon, estimate, M):
    ok = np.abs(np.asarray(epsilon) - np.asarray(estimate)) <= np.asarray(error_bound(epsilon, estimate, M)) + 1e-12
    return bool(ok) if np.ndim(ok) == 0 else ok


def _fejer(x, M):
    # |sum_{k<M} e^{2 pi i k x}|^2 / M^2
    s = np.sin(np.pi * x)
    num = np.sin(M * np.pi * x)
    out = np.ones_like(x)
    nz = np.abs(s) > 1e-14
    out[nz] = (num[nz] / (M * s[nz])) ** 2
    return out


@lru_cache(maxsize=4096)
def _distribution(epsilon: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.arange(M)
    omega = math.asin(math.sqrt(epsilon)) / math.pi
    probs = 0.5 * (_fejer(y / M - omega, M) + _fejer(y / M + omega, M))
    probs /= probs.sum()
    values = np.sin(np.pi * y / M) ** 2
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    for a in (probs, values, cdf):
        a.flags.writeable = False
    return values, probs, cdf


def outcome_distribution(epsilon: float, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact M-point phase-estimation outcome law for success probability ``epsilon``.

    The Grover iterate has eigenphases ``+-2 theta`` with ``theta = arcsin sqrt(epsilon)``;
    the starting state is an equal mix of both eigenvectors, so outcome ``y``
    has probability ``(F(y/M - theta/pi) + F(y/M + theta/pi)) / 2`` with the
    Fejer kernel F, and reports ``sin^2(pi y / M)``.
    """
    values, probs, _ = _distribution(float(epsilon), int(M))
    return values, probs


_WINDOW = 64


def _sample_phase(epsilon: float, M: int, rng: np.random.Generator, n: int) -> np.ndarray:
    # sin^2(pi y/M) is symmetric under y -> M - y, so the -theta branch gives
    # the same value law as the +theta branch; draw y from F(y/M - omega)
    omega = math.asin(math.sqrt(epsilon)) / math.pi
    centre = int(math.floor(M * omega))
    y = np.arange(centre - _WINDOW, centre + _WINDOW + 1)
    w = _fejer(y / M - omega, M)
    inside = w.sum()
    u = rng.random(n)
    out = np.empty(n, dtype=np.int64)
    hit = u < inside
    cdf = np.cumsum(w)
    out[hit] = y[np.minimum(np.searchsorted(cdf, u[hit], side="right"), y.size - 1)]
    if not hit.all():
        full = _fejer(np.arange(M) / M - omega, M)
        full[np.mod(y, M)] = 0.0
        full /= full.sum()
        out[~hit] = rng.choice(M, size=int((~hit).sum()), p=full)
    return np.sin(np.pi * np.mod(out, M) / M) ** 2


class PhaseEstimationBackend:
    """Samples Est-Amp outputs from the exact phase-estimation distribution.

    Large M draws from a window of the Fejer kernel around its peak and
    falls back to the full table only for the (rare) draws outside it, so
    the law is exact at O(1) cost per draw.
    """

    name = "phase"

    def sample(self, epsilon: float, M: int, rng: np.random.Generator, size=None):
        if epsilon <= 0.0:
            return 0.0 if size is None else np.zeros(size)
        n = 1 if size is None else int(np.prod(size))
        if M <= 4 * _WINDOW:
            values, _, cdf = _distribution(float(epsilon), int(M))
            y = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), M - 1)
            out = values[y]
        else:
            out = _sample_phase(float(epsilon), int(M), rng, n)
        return float(out[0]) if size is None else out.reshape(size)


class AdversarialBackend:
    """Worst case allowed by the Est-Amp guarantee.

    With probability exactly 8/pi^2 the draw is an extreme grid value still
    inside the error bound (lowest or highest, fair coin); otherwise it is a
    grid value violating the bound.  ``epsilon == 0`` always yields 0.
    """

    name = "adversarial"

    def __init__(self, success: float = GUARANTEE):
        self.success = success

    def sample(self, epsilon: float, M: int, rng: np.random.Generator, size=None):
        n = 1 if size is None else int(np.prod(size))
        if epsilon <= 0.0:
            return 0.0 if size is None else np.zeros(size)
        grid = np.sin(np.pi * np.arange(M // 2 + 1) / M) ** 2
        inside = bound_holds(epsilon, grid, M)
        good = grid[inside]
        bad = grid[~inside]
        if good.size == 0:
            good = grid[[int(np.argmin(np.abs(grid - epsilon)))]]
        extremes = np.array([good.min(), good.max()])
        ok = rng.random(n) < self.success
        out = extremes[rng.integers(0, 2, n)]
        if bad.size:
            out = np.where(ok, out, bad[rng.integers(0, bad.size, n)])
        return float(out[0]) if size is None else out.reshape(size)


DEFAULT_BACKEND = PhaseEstimationBackend()


def est_amp(epsilon: float, M: int, rng: np.random.Generator, backend=None, size=None):
    """One Est-Amp outcome (M evaluations of the estimated algorithm)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if M < 1:
        raise ValueError("M must be >= 1")
    return (backend or DEFAULT_BACKEND).sample(epsilon, M, rng, size)


def median_est_amp(epsilon: float, M: int, reps: int, rng: np.random.Generator, backend=None) -> float:
    """Median of ``reps`` independent Est-Amp draws; ``reps`` must be odd."""
    if reps < 1 or reps % 2 == 0:
        raise ValueError("reps must be a positive odd number")
    draws = est_amp(epsilon, M, rng, backend, size=reps)
    return float(np.median(draws))


def default_reps(k: int, p_floor: float) -> int:
    """``2k + 2 ceil(log2 log2 (1/p)) + 1`` repetitions (always odd)."""
    inv = 1.0 / p_floor
    ll = math.ceil(math.log2(math.log2(inv))) if inv > 2 else 0
    return 2 * k + 2 * max(0, ll) + 1


@dataclass(frozen=True)
class EstimateParams:
    c: float
    p_floor: float
    k: int
    reps: int | None = None

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            # c = 1 makes the M cap 8 pi / (c sqrt((1-c) p)) infinite
            raise ValueError("c must lie in (0, 1)")
        if not 0.0 < self.p_floor <= 1.0:
            raise ValueError("p_floor must lie in (0, 1]")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.reps is None:
            object.__setattr__(self, "reps", default_reps(self.k, self.p_floor))
        elif self.reps < 1 or self.reps % 2 == 0:
            raise ValueError("reps must be a positive odd number")

    @property
    def m_max(self) -> float:
        return 8 * math.pi / (self.c * math.sqrt((1 - self.c) * self.p_floor))


@dataclass
class EstimateResult:
    value: float
    evaluations: int
    final_m: int
    rounds: int
    promise_violated: bool = False
    trace: list = field(default_factory=list, repr=False)

    def __float__(self):
        return self.value


def stop_condition(estimate: float, M: int, c: float) -> bool:
    if estimate <= 0.0:
        return False
    return 2 * math.pi * math.sqrt(estimate * (1 - estimate)) / M + math.pi ** 2 / M ** 2 <= c * estimate


def estimate(epsilon: float, params: EstimateParams, meter: CostMeter, rng: np.random.Generator,
             cost_per_eval: int = 1, backend=None) -> EstimateResult:
    """Relative-error estimate of ``epsilon`` by doubling M until the error test passes.

    M starts at 2; after each median Est-Amp round the loop stops once
    ``2 pi sqrt(e(1-e))/M + pi^2/M^2 <= c e``.  Otherwise M doubles and the
    loop gives up, returning 0, as soon as M exceeds ``m_max``.  Every round
    charges ``M * reps * cost_per_eval`` steps to ``meter``.
    """
    violated = 0.0 < epsilon < params.p_floor
    if violated:
        warnings.warn(f"epsilon={epsilon:.3g} is below the promised floor {params.p_floor:.3g}",
                      PromiseWarning, stacklevel=2)
    M = 2
    evaluations = 0
    rounds = 0
    trace = []
    value = 0.0
    while True:
        e = median_est_amp(epsilon, M, params.reps, rng, backend)
        evaluations += M * params.reps
        rounds += 1
        trace.append((M, e))
        if stop_condition(e, M, params.c):
            value = e
            break
        M *= 2
        if M > params.m_max:
            break
    meter.charge(evaluations * cost_per_eval)
    return EstimateResult(value, evaluations, trace[-1][0], rounds, violated, trace)
