"""Reduction from plain search to variable-time search.

An item that may take t steps is replaced by a group of t' plain bits,
where t' is the largest group that exact Grover search (plus one query to
read the located bit) can decide with certainty in t queries.  Any
variable-time search algorithm then yields a plain search algorithm over
``m = sum t'_i`` bits, and the plain lower bound transfers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .calculus import exact_grover_prob
from .model import CostMeter

QUARTER_PI = math.pi / 4
SQUARE_CONSTANT = 16 / (9 * math.pi ** 2)


def _budget(tp: int) -> int:
    """Queries needed for a group of size tp: ``ceil(pi/4 sqrt(tp)) + 1``, or 1 when tp == 1."""
    return 1 if tp == 1 else _exact_ceil(tp) + 1


def _exact_ceil(tp: int) -> int:
    x = QUARTER_PI * math.sqrt(tp)
    c = math.ceil(x)
    if abs(x - round(x)) < 1e-9:
        # decide near-integers with 50 digits
        with mpmath.workdps(50):
            c = int(mpmath.ceil(mpmath.pi / 4 * mpmath.sqrt(tp)))
    return c


def _fits(tp: int, t: int) -> bool:
    return _exact_ceil(tp) + 1 <= t


def t_prime(t):
    """Largest t' with ``ceil(pi/4 sqrt(t')) + 1 <= t``; 1 if there is none.

    Accepts an int or an integer array.
    """
    if np.ndim(t) > 0:
        return np.array([t_prime(int(x)) for x in np.asarray(t).ravel()], dtype=np.int64).reshape(np.shape(t))
    t = int(t)
    if t < 1:
        raise ValueError("t must be >= 1")
    if t < 2:
        return 1
    # ceil(pi/4 sqrt(x)) <= t-1  <=>  sqrt(x) <= 4(t-1)/pi
    guess = int((4 * (t - 1) / math.pi) ** 2)
    tp = max(1, guess + 2)
    while tp > 1 and not _fits(tp, t):
        tp -= 1
    if not _fits(tp, t):
        return 1
    while _fits(tp + 1, t):
        tp += 1
    return tp


def t_prime_table(t_max: int) -> np.ndarray:
    """``t_prime(t)`` for t = 1..t_max, vectorised with an exact recheck of near-boundary cases."""
    t = np.arange(1, t_max + 1, dtype=np.int64)
    tp = np.floor((4 * (t - 1) / math.pi) ** 2).astype(np.int64)
    tp = np.maximum(tp, 1)
    # a candidate is close to the boundary when pi/4 sqrt(tp or tp+1) is near an integer
    x0 = QUARTER_PI * np.sqrt(tp.astype(float))
    x1 = QUARTER_PI * np.sqrt((tp + 1).astype(float))
    near = (np.abs(x0 - np.round(x0)) < 1e-6) | (np.abs(x1 - np.round(x1)) < 1e-6) | (t < 3)
    for idx in np.flatnonzero(near):
        tp[idx] = t_prime(int(t[idx]))
    return tp


@dataclass(frozen=True)
class GroupLayout:
    sizes: tuple
    offsets: tuple = field(init=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("group sizes must be >= 1")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "offsets", tuple(int(v) for v in np.concatenate(([0], np.cumsum(sizes)[:-1]))))

    @classmethod
    def from_times(cls, times: Sequence[int]) -> "GroupLayout":
        return cls(tuple(int(t_prime(int(t))) for t in times))

    @property
    def m(self) -> int:
        return sum(self.sizes)

    def group(self, i: int) -> range:
        return range(self.offsets[i], self.offsets[i] + self.sizes[i])


@dataclass
class GroupAnswer:
    bit: int
    queries: int
    certainty: float
    position: int | None = None


def group_oracle(layout: GroupLayout, bits: Sequence[int], i: int, meter: CostMeter) -> GroupAnswer:
    """OR of group i computed with certainty.

    A single bit is read directly.  Larger groups run exact Grover search
    (computed in the two-dimensional subspace) and then read the bit at the
    index it returns.  The promise is at most one 1 in the whole vector.
    """
    g = layout.group(i)
    tp = layout.sizes[i]
    if tp == 1:
        meter.charge(1)
        return GroupAnswer(int(bits[g.start]), 1, 1.0, g.start if bits[g.start] else None)
    ones = [k for k in g if bits[k]]
    if len(ones) > 1:
        raise ValueError(f"group {i} holds {len(ones)} ones; the promise allows at most one")
    _, prob = exact_grover_prob(tp, len(ones))
    queries = _budget(tp)
    meter.charge(queries)
    if ones:
        return GroupAnswer(1, queries, prob, ones[0])
    return GroupAnswer(0, queries, prob, None)


@dataclass
class ReductionReport:
    times: tuple
    t_primes: tuple
    m: int
    queries: tuple
    within_budget: bool
    certainty_ok: bool
    sum_inequality: bool
    constant: str = "4 c' / (3 pi)"

    @property
    def ok(self) -> bool:
        return self.within_budget and self.certainty_ok and self.sum_inequality


def reduction_harness(times: Sequence[int], tol: float = 1e-9) -> ReductionReport:
    """Build the layout for ``times`` and check the constructive inequalities.

    For every item the group oracle must stay within t_i queries and be
    certain on both a marked and an unmarked group, and the total group
    size must satisfy ``sum t'_i >= 16/(9 pi^2) sum t_i^2``.  With c' the
    plain search constant this gives a lower bound ``4c'/(3 pi) sqrt(sum t_i^2)``.
    """
    times = tuple(int(t) for t in times)
    if not times or min(times) < 1:
        raise ValueError("all times must be >= 1")
    layout = GroupLayout.from_times(times)
    used, budget_ok, cert_ok = [], True, True
    for i, t in enumerate(times):
        tp = layout.sizes[i]
        q = _budget(tp)
        used.append(q)
        budget_ok &= q <= t
        for marked in (0, 1):
            prob = 1.0 if tp == 1 else exact_grover_prob(tp, marked)[1]
            cert_ok &= abs(prob - 1.0) <= tol
    lhs = layout.m
    rhs = SQUARE_CONSTANT * sum(t * t for t in times)
    return ReductionReport(times, layout.sizes, lhs, tuple(used), budget_ok, cert_ok, lhs >= rhs)
