"""Search with known evaluation times.

The scheduler works on abstract timed algorithms: each has a running time,
an interval known to contain its success probability, and (simulator side
only) its true success probability together with the distribution of
marked indices it outputs on success.  One level of the recursion

1. checks cheap algorithms one by one (``t / sqrt(p) <= T0 / (n log n)``),
2. boosts small success probabilities into ``[1/(9 log n), 1/log n]``,
3. buckets the rest into (time, probability) cells of ratio ``1 + 1/log n``,
   each cell becoming one algorithm that runs a uniformly random member,

and recurses on the cells until at most ``n0`` algorithms remain, which are
searched directly.  Because every piece is an amplitude-amplification
wrapper around the previous one, the success probability of the whole
schedule is computed exactly with :mod:`vtsearch.calculus`; randomness is
only used to draw the measurement outcomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .calculus import (ProbInterval, amplify_exact, best_rounds, choose_m, log2n,
                       reps_for)
from .model import CostMeter, Instance, random_subset_chain, run_item

# (1+x)^3 <= 1 + 7x for x <= 1: two time-cell edges and one probability-cell edge
BUCKET_CONSTANT = 7.0


@dataclass(frozen=True, eq=False)
class TimedAlg:
    """A sub-algorithm the scheduler can run.

    ``cost`` and ``prob`` are what the designer knows.  ``true_prob``, the
    leaf ``index`` and the weighted ``children`` belong to the simulator and
    never influence a scheduling decision.  Amplification changes the
    success probability but not which index is output on success.
    """

    cost: int
    prob: ProbInterval
    true_prob: float = 0.0
    index: int | None = None
    children: tuple = ()
    factor: int = 1

    @property
    def marked(self) -> bool:
        return self.true_prob > 0.0

    @property
    def energy(self) -> float:
        """``cost^2 / p`` with p the known lower bound."""
        return self.cost ** 2 / self.prob.lo

    @classmethod
    def item(cls, index: int, t: int, x: int) -> "TimedAlg":
        return cls(int(t), ProbInterval.exact(1.0), float(x), int(index))

    @property
    def members(self) -> tuple:
        """Item indices this algorithm may output."""
        if self.index is not None:
            return (self.index,)
        return tuple(i for _, c in self.children for i in c.members)

    @property
    def weights(self) -> dict:
        """Marked index -> probability of outputting it."""
        if self.index is not None:
            return {self.index: self.true_prob} if self.true_prob > 0 else {}
        base = sum(w * c.true_prob for w, c in self.children)
        out: dict = {}
        if base <= 0:
            return out
        for w, c in self.children:
            for i, v in c.weights.items():
                out[i] = out.get(i, 0.0) + w * v * self.true_prob / base
        return out

    def draw(self, rng: np.random.Generator) -> int:
        """Index output by one successful run."""
        alg = self
        while alg.index is None:
            mass = np.array([w * c.true_prob for w, c in alg.children])
            j = int(np.flatnonzero(mass)[0]) if np.count_nonzero(mass) == 1 else \
                int(rng.choice(len(mass), p=mass / mass.sum()))
            alg = alg.children[j][1]
        return alg.index

    def amplified(self, m: int) -> "TimedAlg":
        if m == 0:
            return self
        return TimedAlg(self.cost * (2 * m + 1), self.prob.amplified(m),
                        amplify_exact(self.true_prob, m), self.index, self.children,
                        self.factor * (2 * m + 1))

    def prob_for(self, bits) -> float:
        """Success probability if the leaf items had the given bits."""
        if self.index is not None:
            base = float(bits[self.index])
        else:
            base = sum(w * c.prob_for(bits) for w, c in self.children)
        if self.factor == 1:
            return base
        return math.sin(self.factor * math.asin(math.sqrt(min(1.0, base)))) ** 2


def _compose(algs: Sequence[TimedAlg], w: Sequence[float], lo: float, hi: float) -> TimedAlg:
    true = sum(wj * a.true_prob for wj, a in zip(w, algs))
    return TimedAlg(max(a.cost for a in algs), ProbInterval(lo, min(1.0, max(hi, lo))),
                    float(true), None, tuple(zip(map(float, w), algs)))


def compose_uniform(algs: Sequence[TimedAlg]) -> TimedAlg:
    """Algorithm that picks one of ``algs`` uniformly at random and runs it.

    Its running time is the longest member's; its probability interval
    assumes that any single member may be the marked one.
    """
    k = len(algs)
    lo = min(a.prob.lo for a in algs) / k
    hi = max(a.prob.hi for a in algs) / k
    return _compose(algs, [1.0 / k] * k, lo, hi)


def compose_balanced(algs: Sequence[TimedAlg]) -> TimedAlg:
    """Like :func:`compose_uniform` but picks member j with probability proportional to ``1/lo_j``.

    Every member then contributes the same lower bound, so the composite's
    interval ratio is the largest member ratio instead of the spread of the
    members' probabilities.
    """
    inv = np.array([1.0 / a.prob.lo for a in algs])
    w = inv / inv.sum()
    hi = max(float(wj) * a.prob.hi for wj, a in zip(w, algs))
    return _compose(algs, w, float(1.0 / inv.sum()), hi)


@dataclass(frozen=True)
class KnownConfig:
    n0: int = 16
    small_n: int = 4
    sequential_const: float = 1.0
    bucket_const: float = 1.0
    base_target: float = 0.9
    repetitions: int = 3


@dataclass
class Check:
    """Run ``alg`` amplified with m rounds, ``reps`` times in a row."""

    alg: TimedAlg
    m: int
    reps: int
    worst: float

    @property
    def run_cost(self) -> int:
        return self.alg.cost * (2 * self.m + 1)

    @property
    def cost(self) -> int:
        return self.run_cost * self.reps

    @property
    def true_success(self) -> float:
        return amplify_exact(self.alg.true_prob, self.m)

    @property
    def failure(self) -> float:
        return (1.0 - self.true_success) ** self.reps


def amplified_check(alg: TimedAlg, failure: float, max_reps: int | None = None) -> Check:
    m, worst = best_rounds(alg.prob.lo, alg.prob.hi)
    reps = reps_for(worst, failure) if worst > 0 else 1
    if max_reps is not None:
        reps = min(reps, max_reps)
    return Check(alg, m, reps, worst)


@dataclass
class Bucket:
    time_cell: tuple[float, float]
    prob_cell: tuple[float, float]
    members: list
    composite: TimedAlg


@dataclass
class KnownPlan:
    """One level of the schedule; ``child`` is the plan for the bucket composites."""

    n: int
    log_n: float
    T0: float = 0.0
    sequential: list = field(default_factory=list)
    boosts: list = field(default_factory=list)
    buckets: list = field(default_factory=list)
    child: "KnownPlan | None" = None
    base: list | None = None
    base_mode: str = ""
    survivor_energy: float = 0.0
    boosted_energy: float = 0.0
    bucket_energy: float = 0.0

    def levels(self) -> Iterator["KnownPlan"]:
        plan = self
        while plan is not None:
            yield plan
            plan = plan.child

    def checks(self) -> Iterator[Check]:
        for level in self.levels():
            yield from level.sequential
            if level.base:
                yield from level.base

    @property
    def depth(self) -> int:
        return sum(1 for _ in self.levels())

    @property
    def cost(self) -> int:
        """Cost of running every check of the schedule."""
        return sum(c.cost for c in self.checks())

    @property
    def success_probability(self) -> float:
        fail = 1.0
        for c in self.checks():
            fail *= c.failure
        return 1.0 - fail

    def success_for(self, bits) -> float:
        """Success probability of the same schedule on a different bit vector."""
        fail = 1.0
        for c in self.checks():
            p = amplify_exact(c.alg.prob_for(bits), c.m)
            fail *= (1.0 - p) ** c.reps
        return 1.0 - fail

    @property
    def overhead(self) -> float:
        """Product over levels of (sum s^2/q after bucketing) / (sum t^2/p before boosting)."""
        out = 1.0
        for level in self.levels():
            if level.buckets and level.survivor_energy > 0:
                out *= level.bucket_energy / level.survivor_energy
        return out

    @property
    def d_values(self) -> list[float]:
        return [b.composite.prob.d for lv in self.levels() for b in lv.buckets]


def split_sequential(algs: Sequence[TimedAlg], T0: float, n: int, config: KnownConfig = KnownConfig()):
    """Separate the algorithms cheap enough to check one at a time.

    Returns ``(checks, survivors)``.  Each cheap algorithm is amplified to
    the best worst-case success it admits and repeated until it is missed
    with probability at most ``1/n^2`` (never more than ``ceil(2 log n)`` runs).
    """
    log_n = log2n(n)
    threshold = config.sequential_const * T0 / (n * log_n)
    checks, survivors = [], []
    cap = math.ceil(2 * log_n)
    for a in algs:
        if a.cost / math.sqrt(a.prob.lo) <= threshold:
            checks.append(amplified_check(a, 1.0 / n ** 2, cap))
        else:
            survivors.append(a)
    return checks, survivors


def boost_small_probs(algs: Sequence[TimedAlg], n: int) -> tuple[list[TimedAlg], list[int]]:
    """Amplify every algorithm with ``p < 1/(9 log n)`` so that ``(2m+1)^2 p`` is in ``[1/(9 log n), 1/log n]``."""
    floor = 1.0 / (9.0 * log2n(n))
    out, ms = [], []
    for a in algs:
        m = choose_m(a.prob.lo, max(n, 2)) if a.prob.lo < floor else 0
        out.append(a.amplified(m))
        ms.append(m)
    return out, ms


def p0_floor(n: int) -> float:
    log_n = log2n(n)
    return (1.0 - 1.0 / (3.0 * log_n)) / (9.0 * log_n)


def _cell_index(values: np.ndarray, anchor: float, ratio: float) -> np.ndarray:
    # half-open cells (anchor r^(k-1), anchor r^k]
    return np.ceil(np.log(values / anchor) / math.log(ratio) - 1e-9).astype(np.int64)


def partition_buckets(algs: Sequence[TimedAlg], n: int, T0: float | None = None) -> list[Bucket]:
    """Group algorithms into (time, probability) cells with ratio ``1 + 1/log n``."""
    if not algs:
        return []
    log_n = log2n(n)
    ratio = 1.0 + 1.0 / log_n
    costs = np.array([a.cost for a in algs], dtype=float)
    probs = np.array([a.prob.lo for a in algs], dtype=float)
    T0 = float(costs.max()) if T0 is None else T0
    p0 = p0_floor(n)
    t_anchor = min(T0 * math.sqrt(p0) / (n * log_n), costs.min())
    p_anchor = min(p0, probs.min())
    kt = _cell_index(costs, t_anchor, ratio)
    kp = _cell_index(probs, p_anchor, ratio)
    cells: dict = {}
    for idx, key in enumerate(zip(kt.tolist(), kp.tolist())):
        cells.setdefault(key, []).append(algs[idx])
    buckets = []
    for (a, b), members in sorted(cells.items()):
        buckets.append(Bucket((t_anchor * ratio ** (a - 1), t_anchor * ratio ** a),
                              (p_anchor * ratio ** (b - 1), p_anchor * ratio ** b),
                              members, compose_uniform(members)))
    return buckets


def bucketing_ratio(algs: Sequence[TimedAlg], buckets: Sequence[Bucket]) -> float:
    """``sum_j s_j^2/q_j`` over buckets divided by ``sum_i t_i^2/p_i`` over the inputs."""
    return sum(b.composite.energy for b in buckets) / sum(a.energy for a in algs)


def _base_plan(algs: Sequence[TimedAlg], config: KnownConfig) -> tuple[list[Check], str]:
    """Cheapest split of ``algs`` (sorted by cost) into consecutive groups.

    Each group runs as one Grover composite (see :func:`compose_balanced`), amplified and repeated until it
    misses with probability at most ``1 - base_target``.  Singleton groups
    give plain sequential checks, a single group gives plain Grover.
    """
    fail = 1.0 - config.base_target
    ready = [a.amplified(amplified_check(a, fail).m) if a.prob.lo < 1.0 else a for a in algs]
    order = sorted(range(len(ready)), key=lambda i: ready[i].cost)
    ready = [ready[i] for i in order]
    k = len(ready)
    best = [0.0] + [math.inf] * k
    choice: list = [None] * (k + 1)
    for end in range(1, k + 1):
        for start in range(end):
            group = ready[start:end]
            alg = group[0] if len(group) == 1 else compose_balanced(group)
            check = amplified_check(alg, fail)
            total = best[start] + check.cost
            if total < best[end]:
                best[end] = total
                choice[end] = (start, check)
    checks = []
    end = k
    while end > 0:
        start, check = choice[end]
        checks.append(check)
        end = start
    checks.reverse()
    mode = "grover" if len(checks) == 1 and k > 1 else ("sequential" if len(checks) == k else "grouped")
    return checks, mode


def build_plan(algs: Sequence[TimedAlg], config: KnownConfig = KnownConfig()) -> KnownPlan:
    """Deterministic schedule for ``algs`` (uses designer knowledge only)."""
    n = len(algs)
    plan = KnownPlan(n, log2n(n))
    if n == 0:
        return plan
    if n <= max(config.n0, config.small_n):
        plan.base, plan.base_mode = _base_plan(algs, config)
        return plan
    plan.T0 = max(a.cost / math.sqrt(a.prob.lo) for a in algs)
    plan.sequential, survivors = split_sequential(algs, plan.T0, n, config)
    if not survivors:
        return plan
    boosted, ms = boost_small_probs(survivors, n)
    plan.boosts = ms
    buckets = partition_buckets(boosted, n, plan.T0)
    plan.survivor_energy = sum(a.energy for a in survivors)
    plan.boosted_energy = sum(a.energy for a in boosted)
    plan.bucket_energy = sum(b.composite.energy for b in buckets)
    composites = [b.composite for b in buckets]
    if len(composites) >= n:
        # bucketing made no progress; search what is left directly
        plan.base, plan.base_mode = _base_plan(boosted, config)
        return plan
    plan.buckets = buckets
    plan.child = build_plan(composites, config)
    return plan


def run_plan(plan: KnownPlan, rng: np.random.Generator, meter: CostMeter,
             verify: Callable[[int], bool] | None = None) -> int | None:
    """Execute the schedule and return the first verified candidate.

    The meter is charged the schedule's full deterministic cost; outcomes
    of the individual runs are drawn from their exact success probabilities.
    """
    meter.charge(plan.cost)
    for check in plan.checks():
        p = check.true_success
        if p <= 0.0:
            continue
        for _ in range(check.reps):
            if rng.random() < p:
                idx = check.alg.draw(rng)
                if verify is None or verify(idx):
                    return idx
    return None


def sequential_phase(algs: Sequence[TimedAlg], T0: float, meter: CostMeter, rng: np.random.Generator,
                     verify: Callable[[int], bool] | None = None, config: KnownConfig = KnownConfig()):
    """Check the cheap algorithms one by one.  Returns ``(found index or None, survivors)``."""
    checks, survivors = split_sequential(algs, T0, len(algs), config)
    found = run_plan(KnownPlan(len(algs), log2n(len(algs)), T0, sequential=checks), rng, meter, verify)
    return found, survivors


def reduce_to_single_marked(instance: Instance, rng: np.random.Generator,
                            config: KnownConfig = KnownConfig()) -> tuple[list[np.ndarray], int]:
    """Random subset chain (n, n/2, ..., 1) plus the number of times to repeat it."""
    return random_subset_chain(instance, rng), config.repetitions


@dataclass
class SearchResult:
    index: int | None
    success_probability: float
    cost: int
    plans: list = field(default_factory=list, repr=False)
    subsets: list = field(default_factory=list, repr=False)

    @property
    def found(self) -> bool:
        return self.index is not None


def item_algs(instance: Instance, indices) -> list[TimedAlg]:
    t, x = instance.times, instance.bits
    return [TimedAlg.item(int(i), int(t[i]), int(x[i])) for i in indices]


def known_search(instance: Instance, rng: np.random.Generator, meter: CostMeter | None = None,
                 config: KnownConfig = KnownConfig()) -> SearchResult:
    """Find a marked item when all evaluation times are known.

    A schedule is built for every element of ``config.repetitions`` random
    subset chains up front, so the returned success probability is exact
    for the drawn chains.  Schedules run in chain order, each charged in
    full, until one yields a candidate that is confirmed by running the
    item to completion; a returned index is therefore always marked.
    """
    meter = CostMeter() if meter is None else meter
    start = meter.total
    subsets: list[np.ndarray] = []
    for _ in range(config.repetitions):
        chain, _ = reduce_to_single_marked(instance, rng, config)
        subsets.extend(chain)
    plans = []
    cache: dict = {}
    for s in subsets:
        key = s.tobytes()
        if key not in cache:
            cache[key] = build_plan(item_algs(instance, s), config)
        plans.append(cache[key])
    fail = 1.0
    for p in plans:
        fail *= 1.0 - p.success_probability
    t = instance.times

    def verify(i: int) -> bool:
        return run_item(instance, i, int(t[i]), meter) == 1

    found = None
    for p in plans:
        found = run_plan(p, rng, meter, verify)
        if found is not None:
            break
    return SearchResult(found, 1.0 - fail, meter.total - start, plans, subsets)
