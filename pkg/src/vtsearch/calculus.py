"""Amplitude amplification arithmetic in the two-dimensional good/bad subspace.

Every algorithm composed in this package ends in a state of the form
``sin(a)|1>|psi_1> + cos(a)|0>|psi_0>``.  Running it (and its inverse) 2m+1
times maps the angle ``a`` to ``(2m+1) a``, so success probabilities can be
tracked exactly without state vectors.

All logarithms are base 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HALF_PI = 0.5 * math.pi
_TOL = 1e-12


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def log2n(n: float) -> float:
    """``log2(n)`` floored at 1 so that ``1/log n`` stays finite for tiny n."""
    return max(1.0, math.log2(n))


def success_angle(delta):
    """Angle ``theta`` in [0, pi/2] with ``sin(theta)**2 == delta``."""
    if isinstance(delta, (float, int)):
        return math.asin(math.sqrt(min(1.0, max(0.0, delta))))
    d = np.clip(np.asarray(delta, dtype=float), 0.0, 1.0)
    return _out(np.arcsin(np.sqrt(d)))


def amplify_exact(delta, m):
    """Success probability after 2m+1 calls: ``sin^2((2m+1) arcsin sqrt(delta))``."""
    theta = success_angle(delta)
    if isinstance(theta, float) and isinstance(m, (int, np.integer)):
        return math.sin((2 * int(m) + 1) * theta) ** 2
    k = 2 * np.asarray(m) + 1
    return _out(np.sin(k * theta) ** 2)


def admissible(delta, m) -> bool:
    """True when ``(2m+1) arcsin sqrt(delta) <= pi/2``, i.e. no overshoot."""
    return bool(np.all((2 * np.asarray(m) + 1) * success_angle(delta) <= HALF_PI + _TOL))


def max_rounds(eps: float) -> float:
    """Largest m allowed for a success-probability cap ``eps``.

    This is ``floor(pi / (4 arcsin sqrt(eps)) - 1/2)``; ``inf`` for ``eps == 0``.
    """
    if eps <= 0:
        return math.inf
    return math.floor(math.pi / (4 * success_angle(eps)) - 0.5 + _TOL)


def aa_lower_bound(delta, m):
    """Guaranteed amplified probability ``(1 - k^2 delta / 3) k^2 delta`` with k = 2m+1.

    Raises ValueError if the rotation would pass pi/2, where the bound is not
    claimed.
    """
    if not admissible(delta, m):
        raise ValueError(f"(2m+1)*arcsin(sqrt(delta)) exceeds pi/2 for m={m}")
    k2 = (2 * np.asarray(m, dtype=float) + 1) ** 2
    d = np.asarray(delta, dtype=float)
    return _out((1.0 - k2 * d / 3.0) * k2 * d)


def choose_m(p: float, n: float) -> int:
    """Smallest m with ``(2m+1)^2 p >= 1/(9 log n)``.

    The choice always lands ``(2m+1)^2 p`` in ``[1/(9 log n), 1/log n]``
    because consecutive odd squares differ by at most a factor 9.
    """
    if n < 2:
        raise ValueError("choose_m needs n >= 2")
    log_n = math.log2(n)
    floor = 1.0 / (9.0 * log_n)
    if not 0.0 < p < floor:
        raise ValueError(f"p={p} outside (0, 1/(9 log n)={floor}); no amplification needed")
    m = max(0, math.ceil((math.sqrt(floor / p) - 1.0) / 2.0))
    while (2 * m + 1) ** 2 * p < floor:
        m += 1
    while m > 0 and (2 * m - 1) ** 2 * p >= floor:
        m -= 1
    assert (2 * m + 1) ** 2 * p <= 1.0 / log_n * (1 + _TOL)
    return m


def monotone_pair(delta_lo: float, delta_hi: float, m: int) -> tuple[float, float]:
    """Amplify both ends of ``[delta_lo, delta_hi]`` and check the ratio is not stretched."""
    if delta_lo > delta_hi:
        raise ValueError("delta_lo must not exceed delta_hi")
    if not admissible(delta_hi, m):
        raise ValueError(f"m={m} overshoots pi/2 at delta_hi={delta_hi}")
    p_lo = amplify_exact(delta_lo, m)
    p_hi = amplify_exact(delta_hi, m)
    assert p_lo <= p_hi + _TOL
    if delta_lo > 0:
        c = delta_hi / delta_lo
        assert p_hi <= c * p_lo * (1 + 1e-9) + _TOL
    return p_lo, p_hi


def amplified_interval(lo: float, hi: float, m: int) -> tuple[float, float]:
    """Exact range of ``amplify_exact(delta, m)`` for delta in ``[lo, hi]``.

    sin^2 on an angle interval reaches its minimum at an endpoint unless the
    interval contains a multiple of pi, and its maximum at an endpoint unless
    it contains an odd multiple of pi/2.
    """
    k = 2 * m + 1
    a = k * success_angle(lo)
    b = k * success_angle(hi)
    ends = (math.sin(a) ** 2, math.sin(b) ** 2)
    low, high = min(ends), max(ends)
    if math.floor(b / math.pi) > math.floor(a / math.pi):
        low = 0.0
    if math.floor((b - HALF_PI) / math.pi) > math.floor((a - HALF_PI) / math.pi):
        high = 1.0
    return low, high


def best_rounds(lo: float, hi: float | None = None, max_m: int | None = None) -> tuple[int, float]:
    """Number of rounds maximising the worst-case success over ``[lo, hi]``.

    Returns ``(m, worst)``; ties go to the smaller m.
    """
    hi = lo if hi is None else hi
    if lo <= 0:
        return 0, 0.0
    th_lo = success_angle(float(lo))
    th_hi = success_angle(float(hi))
    top = math.ceil(math.pi / (4 * th_lo)) + 1
    if max_m is not None:
        top = min(top, max_m)
    if top <= 64:
        best_m, best = 0, -1.0
        for m in range(top + 1):
            a, b = (2 * m + 1) * th_lo, (2 * m + 1) * th_hi
            w = 0.0 if math.floor(b / math.pi) > math.floor(a / math.pi) else min(math.sin(a) ** 2, math.sin(b) ** 2)
            if w > best:
                best_m, best = m, w
        return best_m, best
    ms = np.arange(top + 1)
    k = 2 * ms + 1
    a = k * th_lo
    b = k * th_hi
    worst = np.minimum(np.sin(a) ** 2, np.sin(b) ** 2)
    worst[np.floor(b / math.pi) > np.floor(a / math.pi)] = 0.0
    i = int(np.argmax(worst))
    return int(ms[i]), float(worst[i])


def reps_for(success: float, failure: float) -> int:
    """Independent repetitions needed so that ``(1 - success)**r <= failure``."""
    if success >= 1.0 - 1e-15:
        return 1
    if success <= 0:
        raise ValueError("cannot reach any confidence with zero success probability")
    return max(1, math.ceil(math.log(failure) / math.log1p(-success) - 1e-9))


def exact_grover_schedule(n_items: int) -> tuple[int, float]:
    """Iterations and reduced success probability for zero-error Grover search.

    With one marked item among ``n_items``, the initial angle ``theta`` is
    lowered to ``pi / (2(2k+1))`` (an ancilla rotation) where
    ``k = ceil(pi/(4 theta) - 1/2)``; after k iterations the marked amplitude
    is exactly 1.  Returns ``(k, reduced_delta)``.
    """
    if n_items < 1:
        raise ValueError("need at least one item")
    theta = math.asin(1.0 / math.sqrt(n_items))
    x = math.pi / (4 * theta) - 0.5
    k = round(x) if abs(x - round(x)) < 1e-9 else math.ceil(x)
    reduced = math.sin(math.pi / (2 * (2 * k + 1))) ** 2
    return k, reduced


def exact_grover_prob(n_items: int, marked: int) -> tuple[int, float]:
    """Query budget ``ceil(pi/4 sqrt(n))`` and the success probability of exact Grover.

    Success means: output the marked index when there is one, and report
    that there is none otherwise (the promise is zero or one marked item).
    """
    if marked not in (0, 1):
        raise ValueError("promise allows 0 or 1 marked items")
    queries = math.ceil(math.pi / 4 * math.sqrt(n_items))
    if not marked:
        # the register stays uniform; reading any index returns 0
        return queries, 1.0
    k, reduced = exact_grover_schedule(n_items)
    return queries, amplify_exact(reduced, k)


@dataclass(frozen=True)
class ProbInterval:
    """Success probability known to lie in ``[lo, hi]``; ``d = hi / lo``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.hi <= 1.0 + _TOL:
            raise ValueError(f"bad probability interval [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, p: float) -> "ProbInterval":
        return cls(p, p)

    @property
    def d(self) -> float:
        return self.hi / self.lo if self.lo > 0 else math.inf

    def amplified(self, m: int) -> "ProbInterval":
        lo, hi = amplified_interval(self.lo, self.hi, m)
        return ProbInterval(lo, min(hi, 1.0))
