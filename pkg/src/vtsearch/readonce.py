"""Read-once AND/OR/NOT formulas and their evaluation by nested variable-time search.

Grammar (whitespace ignored)::

    expr   := term ('|' term)*
    term   := factor ('&' factor)*
    factor := '!'? (var | '(' expr ')')
    var    := 'x' [1-9][0-9]*

Negations are pushed to the leaves when parsing, and nested gates of the
same kind are merged, so every internal node has at least two children and
AND and OR alternate along each path.  Variables are 1-based in formulas
and in assignments (``x1`` is ``assignment[0]``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .calculus import log2n
from .known_search import KnownConfig, build_plan, item_algs
from .model import CostMeter, Instance, random_subset_chain


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class DuplicateVariableError(ValueError):
    def __init__(self, var: int):
        super().__init__(f"variable x{var} appears more than once; formula is not read-once")
        self.var = var


@dataclass(frozen=True)
class Leaf:
    var: int
    negated: bool = False


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


Formula = Union[Leaf, And, Or]


def _gate(kind, children) -> Formula:
    flat = []
    for c in children:
        flat.extend(c.children if isinstance(c, kind) else (c,))
    return flat[0] if len(flat) == 1 else kind(tuple(flat))


def negate(f: Formula) -> Formula:
    """Negation normal form of ``not f``."""
    if isinstance(f, Leaf):
        return Leaf(f.var, not f.negated)
    kind = Or if isinstance(f, And) else And
    return kind(tuple(negate(c) for c in f.children))


def dual(f: Formula) -> Formula:
    """Swap AND and OR, keep the literals; ``dual(f)(not a) == not f(a)``."""
    if isinstance(f, Leaf):
        return f
    kind = Or if isinstance(f, And) else And
    return kind(tuple(dual(c) for c in f.children))


def leaves(f: Formula) -> list[Leaf]:
    if isinstance(f, Leaf):
        return [f]
    return [x for c in f.children for x in leaves(c)]


def height(f: Formula) -> int:
    if isinstance(f, Leaf):
        return 0
    return 1 + max(height(c) for c in f.children)


def size(f: Formula) -> int:
    """Leaf count N."""
    return len(leaves(f))


def depth(f: Formula) -> int:
    """Depth d: number of gate levels, at least 1."""
    return max(1, height(f))


def to_text(f: Formula) -> str:
    if isinstance(f, Leaf):
        return ("!" if f.negated else "") + f"x{f.var}"
    op = " & " if isinstance(f, And) else " | "
    parts = []
    for c in f.children:
        s = to_text(c)
        parts.append(f"({s})" if not isinstance(c, Leaf) else s)
    return op.join(parts)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.seen: set[int] = set()

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> Formula:
        if not self._peek():
            raise FormulaSyntaxError("empty formula", self.pos)
        f = self.expr()
        if self._peek():
            raise FormulaSyntaxError(f"unexpected {self._peek()!r}", self.pos)
        return f

    def expr(self) -> Formula:
        terms = [self.term()]
        while self._peek() == "|":
            self.pos += 1
            terms.append(self.term())
        return _gate(Or, terms)

    def term(self) -> Formula:
        factors = [self.factor()]
        while self._peek() == "&":
            self.pos += 1
            factors.append(self.factor())
        return _gate(And, factors)

    def factor(self) -> Formula:
        neg = False
        if self._peek() == "!":
            self.pos += 1
            neg = True
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            inner = self.expr()
            if self._peek() != ")":
                raise FormulaSyntaxError("expected ')'", self.pos)
            self.pos += 1
        elif ch == "x":
            inner = self.var()
        else:
            raise FormulaSyntaxError(f"expected variable or '(' but found {ch or 'end of input'!r}", self.pos)
        return negate(inner) if neg else inner

    def var(self) -> Leaf:
        start = self.pos
        self.pos += 1
        digits_at = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        digits = self.text[digits_at:self.pos]
        if not digits or digits[0] == "0":
            raise FormulaSyntaxError("variable needs an index 1, 2, ...", start)
        v = int(digits)
        if v in self.seen:
            raise DuplicateVariableError(v)
        self.seen.add(v)
        return Leaf(v)


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


def _check_assignment(f: Formula, assignment) -> None:
    top = max(leaf.var for leaf in leaves(f))
    if len(assignment) < top:
        raise ValueError(f"assignment has {len(assignment)} bits but the formula uses x{top}")


def classical_eval(f: Formula, assignment: Sequence[int]) -> int:
    """Plain bottom-up evaluation (short-circuit free)."""
    _check_assignment(f, assignment)
    return _classical(f, assignment)


def _classical(f: Formula, a) -> int:
    if isinstance(f, Leaf):
        return int(a[f.var - 1]) ^ int(f.negated)
    vals = [_classical(c, a) for c in f.children]
    return int(all(vals)) if isinstance(f, And) else int(any(vals))


def parse_assignment(bits: str) -> list[int]:
    out = []
    for k, ch in enumerate(bits.strip()):
        if ch not in "01":
            raise ValueError(f"assignment: character {k + 1} is {ch!r}, expected 0 or 1")
        out.append(int(ch))
    if not out:
        raise ValueError("assignment: empty bit string")
    return out


def _split(n: int, k: int, rng: np.random.Generator) -> list[int]:
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
    return list(np.diff(np.concatenate(([0], cuts, [n]))).astype(int))


def random_formula(N: int, d: int, rng: np.random.Generator) -> Formula:
    """Random read-once formula with exactly N leaves and depth d.

    Gates alternate between AND and OR; fan-in is around ``n^(1/h)`` for a
    subtree with n leaves and h levels to go, and literals are negated with
    probability 1/2.
    """
    if d < 1 or N < 1:
        raise ValueError("need N >= 1 and d >= 1")
    if (N == 1 and d != 1) or (N > 1 and N < d + 1):
        raise ValueError(f"N={N} leaves cannot reach depth {d}")
    counter = iter(range(1, N + 1))

    def build(n: int, h: int, kind) -> Formula:
        if h == 0 or n == 1:
            return Leaf(next(counter), bool(rng.integers(2)))
        if h == 1:
            return kind(tuple(Leaf(next(counter), bool(rng.integers(2))) for _ in range(n)))
        target = n ** (1.0 / h)
        k = int(np.clip(round(target * rng.uniform(0.7, 1.4)), 2, n))
        # the first child carries the remaining height and needs h leaves
        while k > 2 and n - (k - 1) < h:
            k -= 1
        first = max(h, int(round(n / k)))
        first = min(first, n - (k - 1))
        rest = _split(n - first, k - 1, rng) if k > 2 else [n - first]
        sizes = [first] + rest
        other = Or if kind is And else And
        kids = []
        for j, s in enumerate(sizes):
            hh = h - 1 if j == 0 else min(h - 1, s - 1)
            kids.append(build(s, hh, other))
        return kind(tuple(kids))

    if N == 1:
        return Leaf(1, bool(rng.integers(2)))
    f = build(N, d, And if rng.integers(2) else Or)
    perm = rng.permutation(N) + 1
    return _relabel(f, perm)


def _relabel(f: Formula, perm) -> Formula:
    if isinstance(f, Leaf):
        return Leaf(int(perm[f.var - 1]), f.negated)
    return type(f)(tuple(_relabel(c, perm) for c in f.children))


def majority_correct(q: float, r: int) -> float:
    """Probability that the majority of r independent runs (r odd) is right when each is right w.p. q."""
    k = np.arange(r // 2 + 1, r + 1)
    logc = np.array([math.lgamma(r + 1) - math.lgamma(i + 1) - math.lgamma(r - i + 1) for i in k])
    with np.errstate(divide="ignore"):
        terms = np.exp(logc + k * np.log(q) + (r - k) * np.log1p(-q)) if 0 < q < 1 else None
    if terms is None:
        return float(q)
    return float(min(1.0, terms.sum()))


def repetitions(N: int, c_rep: float = 3.0) -> int:
    """Odd repetition count ``ceil(c_rep log N)`` used for every internal child."""
    r = max(1, math.ceil(c_rep * log2n(N)))
    return r if r % 2 else r + 1


@dataclass
class NodeEval:
    """Evaluator for one subformula.

    ``cost`` queries per run (deterministic), ``q`` a lower bound on the
    probability that a run returns the classical value.
    """

    value: int
    cost: int
    q: float
    plans: list = field(default_factory=list, repr=False)
    child_q: list = field(default_factory=list, repr=False)
    child_marked: list = field(default_factory=list, repr=False)
    child_cost: list = field(default_factory=list, repr=False)


@dataclass
class EvalReport:
    value: int
    queries: int
    p_correct: float
    classical: int
    reps: dict = field(default_factory=dict)
    max_child_error: float = 0.0
    N: int = 0
    d: int = 0


class _Evaluator:
    def __init__(self, assignment, N: int, rng, config: KnownConfig, c_rep: float, ideal: bool):
        self.a = assignment
        self.N = N
        self.rng = rng
        self.config = config
        self.r = repetitions(N, c_rep)
        self.ideal = ideal
        self.max_child_error = 0.0
        self.reps: dict = {}

    def run(self, f: Formula, level: int = 0) -> NodeEval:
        if isinstance(f, Leaf):
            return NodeEval(_classical(f, self.a), 1, 1.0)
        # an OR node looks for a child equal to 1, an AND node for a child equal to 0
        target = 1 if isinstance(f, Or) else 0
        kids = [self.run(c, level + 1) for c in f.children]
        costs, qs, marked = [], [], []
        for c, ev in zip(f.children, kids):
            if isinstance(c, Leaf):
                costs.append(1)
                qs.append(1.0)
            else:
                self.reps[level + 1] = self.r
                costs.append(self.r * ev.cost)
                qc = 1.0 if self.ideal else majority_correct(ev.q, self.r)
                self.max_child_error = max(self.max_child_error, 1.0 - qc)
                qs.append(qc)
            marked.append(int(ev.value == target))
        inst = Instance.from_arrays(costs, marked)
        plans = self._plans(inst)
        found = _success(plans, marked)
        truth = int(any(marked))
        ideal_ok = found if truth else 1.0 - found
        q = _first_order(plans, marked, qs, truth)
        value = target if truth else 1 - target
        return NodeEval(value, sum(p.cost for p in plans), q if not self.ideal else ideal_ok,
                        plans, qs, marked, costs)

    def _plans(self, inst: Instance) -> list:
        cache: dict = {}
        plans = []
        for _ in range(self.config.repetitions):
            for s in random_subset_chain(inst, self.rng):
                key = s.tobytes()
                if key not in cache:
                    cache[key] = build_plan(item_algs(inst, s), self.config)
                plans.append(cache[key])
        return plans


def _success(plans, bits) -> float:
    fail = 1.0
    for p in plans:
        fail *= 1.0 - p.success_for(bits)
    return 1.0 - fail


def _first_order(plans, marked, qs, truth: int) -> float:
    """Lower bound on P(node correct) with independent child errors.

    Exact for the events "no child wrong" and "exactly one child wrong";
    outcomes with two or more wrong children are counted as failures.
    """
    bits = np.array(marked, dtype=float)
    qs = np.asarray(qs, dtype=float)
    all_ok = float(np.prod(qs))

    def ok(b):
        s = _success(plans, b)
        return s if truth else 1.0 - s

    total = all_ok * ok(bits)
    for i in np.flatnonzero(qs < 1.0):
        flipped = bits.copy()
        flipped[i] = 1.0 - flipped[i]
        total += (1.0 - qs[i]) * all_ok / qs[i] * ok(flipped)
    return float(min(1.0, total))


def eval_readonce(f: Formula, assignment: Sequence[int], meter: CostMeter | None, rng: np.random.Generator,
                  config: KnownConfig = KnownConfig(), c_rep: float = 3.0, ideal_children: bool = False) -> EvalReport:
    """Evaluate f with nested searches over the children of every gate.

    Each internal child is run ``repetitions(N)`` times and the majority is
    taken; the children of a gate are then searched with the known-times
    scheduler, their running times playing the role of the evaluation
    times.  The meter is charged the full query count of the root's
    schedule.  The returned value is drawn with the exact per-child error
    model at the root; ``p_correct`` is a lower bound on the probability
    that it equals the classical value.
    """
    _check_assignment(f, assignment)
    meter = CostMeter() if meter is None else meter
    N = size(f)
    ev = _Evaluator(assignment, N, rng, config, c_rep, ideal_children)
    root = ev.run(f)
    meter.charge(root.cost)
    classical = _classical(f, assignment)
    if isinstance(f, Leaf):
        value = classical
    else:
        # realise the children's answers, then the root's search outcome given them
        bits = np.array(root.child_marked, dtype=float)
        wrong = rng.random(len(bits)) >= np.asarray(root.child_q)
        bits[wrong] = 1.0 - bits[wrong]
        found = rng.random() < _success(root.plans, bits)
        target = 1 if isinstance(f, Or) else 0
        value = target if found else 1 - target
    return EvalReport(int(value), root.cost, root.q, classical, dict(ev.reps), ev.max_child_error, N, depth(f))
