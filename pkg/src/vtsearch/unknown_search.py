"""Search when the evaluation times are unknown.

The procedure builds a chain of algorithms B_1, B_2, ...  B_j succeeds with
some probability p_j and then outputs a uniformly random element of the
survivor set S_j (all marked items plus the items that did not finish
within 2^j steps).  Each level draws a few samples from B_j and probes them
for 2^(j+1) steps, then extends the chain by one probe and decides, from an
amplitude estimate alone, whether to amplify.

Only probe results and Estimate outputs drive decisions.  The exact p_j and
S_j are kept next to them for the simulator and for the runtime checks.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .calculus import amplify_exact, choose_m, log2n
from .estimation import EstimateParams, PromiseWarning, estimate
from .model import CostMeter, Instance, run_item

NO_MARKED = "no marked"


@dataclass(frozen=True)
class UnknownParams:
    epsilon: float = 0.1
    D: float | None = None
    c_est: float = 0.1
    strict: bool = False
    backend: object = None
    max_levels: int = 64
    retry_cap: int = 64
    lemma6_C: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        floor = math.pi / math.sqrt(3.0 * self.epsilon)
        if self.D is None:
            object.__setattr__(self, "D", floor)
        elif self.D < floor * (1 - 1e-12):
            raise ValueError(f"D must be at least pi/sqrt(3 epsilon) = {floor:.4g}")

    def k(self, j: int) -> int:
        """Samples per level and Estimate confidence exponent: ``ceil(2 log(D (j+1)))``."""
        return max(1, math.ceil(2 * math.log2(self.D * (j + 1))))


def estimate_floor(n: int, c: float) -> float:
    """Smallest nonzero success probability B'_(j+1) can have.

    B_j succeeds with probability at least ``(1-c)(1-(1+c)/3)/(9 log n)``
    (estimate error plus the amplification loss), and B'_(j+1) keeps at
    least one of at most n outputs.
    """
    return (1 - c) * (1 - (1 + c) / 3) / (9 * n * log2n(n))


@dataclass
class ChainState:
    """Level j of the chain.  ``p`` and ``survivors`` are simulator-side."""

    j: int
    p: float
    survivors: np.ndarray
    cost: int
    p_est: float
    q: float
    amplified: list = field(default_factory=list)

    @property
    def n_j(self) -> int:
        return int(self.survivors.size)


@dataclass
class LevelRecord:
    j: int
    n_j: int
    p: float
    p_est: float
    cost: int
    branch: str = ""
    m: int = 0
    estimate: float = 0.0
    p_prime: float = 0.0
    estimate_ok: bool = True
    lemma5b_ok: bool = True
    an_bound: float = 0.0
    lemma8_ratio: float = 0.0


@dataclass
class UnknownResult:
    index: int | None
    outcome: str
    cost: int
    levels: int
    max_r: int
    success: bool
    trace: list = field(default_factory=list, repr=False)
    estimate_failures: int = 0
    lemma5b_failures: int = 0
    r_bound: float = 0.0
    sample_failure: bool = False

    @property
    def lemma7_ok(self) -> bool:
        return self.max_r <= self.r_bound

    @property
    def lemma6_ok(self) -> bool:
        return all(rec.cost <= rec.an_bound * (1 + 1e-9) for rec in self.trace)


class SampleFailure(RuntimeError):
    """B_j kept failing past the retry cap."""


def initial_state(instance: Instance) -> ChainState:
    n = instance.n
    return ChainState(1, 1.0, np.arange(n), 0, 1.0, 1.0 / n)


def sample_rounds(p_est: float) -> int:
    """Smallest m with ``sin^2((2m+1) arcsin sqrt(p_est)) >= 1/2``."""
    if p_est >= 0.5:
        return 0
    theta = math.asin(math.sqrt(p_est))
    m = max(0, math.ceil((math.pi / 4 / theta - 1) / 2))
    while m > 0 and amplify_exact(p_est, m - 1) >= 0.5:
        m -= 1
    while amplify_exact(p_est, m) < 0.5:
        m += 1
    return m


def draw_sample(chain: ChainState, rng: np.random.Generator, meter: CostMeter, retry_cap: int = 64) -> int:
    """One uniform element of S_j, produced by (amplified) runs of B_j.

    The number of rounds is chosen from the estimate ``p_est``; the runs
    succeed with the true amplified probability.  Each try costs
    ``(2m+1) cost_j``.
    """
    m = sample_rounds(chain.p_est)
    p = amplify_exact(chain.p, m)
    for _ in range(retry_cap):
        meter.charge((2 * m + 1) * chain.cost)
        if rng.random() < p:
            return int(chain.survivors[rng.integers(chain.n_j)])
    raise SampleFailure(f"B_{chain.j} failed {retry_cap} times in a row")


def next_survivors(instance: Instance, chain: ChainState) -> np.ndarray:
    """Outputs of B'_(j+1): members of S_j that are marked or need more than 2^(j+1) steps."""
    s = chain.survivors
    t = instance.times[s]
    x = instance.bits[s]
    return s[(x == 1) | (t > 2 ** (chain.j + 1))]


def extend_chain(chain: ChainState, p_hat: float, n: int, survivors: np.ndarray) -> tuple[ChainState, int, str]:
    """Apply steps (d)/(e) given the estimate ``p_hat > 0`` of B'_(j+1).

    Returns the new state, the number of amplification rounds m and the
    branch taken ("d" or "e").
    """
    if p_hat <= 0:
        raise ValueError("extend_chain needs a positive estimate")
    j = chain.j
    p_prime = chain.p * survivors.size / chain.n_j
    cost_prime = chain.cost + 2 ** (j + 1)
    floor = 1.0 / (9.0 * log2n(n))
    if p_hat >= floor:
        m, branch = 0, "d"
        p_next, est_next = p_prime, p_hat
    else:
        m, branch = choose_m(p_hat, max(n, 2)), "e"
        p_next = amplify_exact(p_prime, m)
        est_next = amplify_exact(p_hat, m)
    q = p_next / survivors.size if survivors.size else 0.0
    state = ChainState(j + 1, p_next, survivors, cost_prime * (2 * m + 1), est_next, q,
                       chain.amplified + [branch == "e"])
    return state, m, branch


def an_bound(ps, ns, amplified, n: int, C: float = 1.0) -> float:
    """Right-hand side of the running-time recurrence for the last level.

    ``ps[j-1], ns[j-1]`` are p_j and n_j for j = 1..J, ``amplified[j-1]``
    tells whether the step from level j to j+1 amplified.
    """
    J = len(ps)
    f = 1.0 + C / log2n(n)

    def r(a: int, b: int) -> int:
        # amplification steps performed for levels a .. b-1
        return int(sum(amplified[a - 1:b - 1]))

    pj, nj = ps[J - 1], ns[J - 1]
    total = f ** r(1, J) * math.sqrt(pj * n / nj)
    for jp in range(2, J + 1):
        total += f ** r(jp, J) * math.sqrt(pj * ns[jp - 2] / (ps[jp - 2] * nj)) * 2 ** jp
    return total


def lemma7_bound(n: int) -> float:
    """Amplification steps between any two levels: q grows >= 9(1-(1+c)/(3 log n)) > 5 per step."""
    return math.log2(n) + 1.0


def theorem4_bound(times) -> float:
    """``sqrt(T) L(sqrt T)^2 L(L(sqrt T))^2`` with ``T = sum t_i^2`` and ``L = max(1, log2)``."""
    root = math.sqrt(float(np.sum(np.asarray(times, dtype=float) ** 2)))
    L = log2n(root)
    return root * L ** 2 * log2n(L) ** 2


def unknown_search(instance: Instance, params: UnknownParams, rng: np.random.Generator,
                   meter: CostMeter | None = None) -> UnknownResult:
    """Search without knowing the evaluation times.

    Returns the index of a marked item (confirmed by a probe) or the
    outcome ``"no marked"``.  ``success`` is judged against the ground
    truth: a found index, or "no marked" on an instance without one.
    """
    meter = CostMeter(strict=params.strict) if meter is None else meter
    start = meter.total
    n = instance.n
    has_marked = bool(instance.bits.any())
    t = instance.times
    total_t2 = float(np.sum(t.astype(float) ** 2))
    p_floor = estimate_floor(n, params.c_est)
    chain = initial_state(instance)
    ps, ns = [chain.p], [chain.n_j]
    trace: list[LevelRecord] = []
    est_fail = l5_fail = 0
    index = None
    outcome = NO_MARKED
    sample_failure = False

    def record(state: ChainState) -> LevelRecord:
        bound = an_bound(ps, ns, state.amplified, n, params.lemma6_C)
        ratio = state.cost / (state.j * math.sqrt(log2n(n)) * math.sqrt(total_t2 / state.n_j))
        rec = LevelRecord(state.j, state.n_j, state.p, state.p_est, state.cost, an_bound=bound, lemma8_ratio=ratio)
        if state.j >= 3:
            # S_(j-1) is defined by the threshold only from level 2 on
            rec.lemma5b_ok = int(np.sum(t > 2 ** (state.j - 1))) >= ns[-2] / 2
        trace.append(rec)
        return rec

    rec = record(chain)
    while chain.j <= params.max_levels:
        j = chain.j
        k = params.k(j)
        steps = 2 ** (j + 1)
        try:
            for _ in range(k):
                i = draw_sample(chain, rng, meter, params.retry_cap)
                if run_item(instance, i, steps, meter) == 1:
                    index = i
                    break
        except SampleFailure:
            sample_failure = True
            outcome = "sample failure"
            break
        if index is not None:
            outcome = "found"
            break
        survivors = next_survivors(instance, chain)
        p_prime = chain.p * survivors.size / chain.n_j
        est_params = EstimateParams(params.c_est, p_floor, k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PromiseWarning)
            res = estimate(p_prime, est_params, meter, rng, cost_per_eval=chain.cost + steps,
                           backend=params.backend)
        p_hat = res.value
        ok = (p_hat == 0.0) if p_prime == 0.0 else abs(p_prime - p_hat) < params.c_est * p_hat
        rec.estimate, rec.p_prime, rec.estimate_ok = p_hat, p_prime, ok
        est_fail += not ok
        if p_hat == 0.0:
            outcome = NO_MARKED
            break
        chain, m, branch = extend_chain(chain, p_hat, n, survivors)
        rec.branch, rec.m = branch, m
        ps.append(chain.p)
        ns.append(chain.n_j)
        rec = record(chain)
        l5_fail += not rec.lemma5b_ok
    else:
        outcome = "level cap"
    # r_(j,j') only grows with the range, so the largest is r_(1, last level)
    max_r = int(sum(chain.amplified))
    success = (index is not None) if has_marked else (outcome == NO_MARKED)
    return UnknownResult(index, outcome, meter.total - start, chain.j, max_r, success, trace,
                         est_fail, l5_fail, lemma7_bound(n), sample_failure)
