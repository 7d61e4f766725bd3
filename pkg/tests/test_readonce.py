import math

import numpy as np
import pytest

from vtsearch.calculus import log2n
from vtsearch.experiments import load_baseline
from vtsearch.model import CostMeter
from vtsearch.readonce import (
    And,
    DuplicateVariableError,
    FormulaSyntaxError,
    Leaf,
    Or,
    classical_eval,
    depth,
    dual,
    eval_readonce,
    leaves,
    majority_correct,
    negate,
    parse_assignment,
    parse_formula,
    random_formula,
    repetitions,
    size,
    to_text,
)


def test_parse_single_leaf():
    f = parse_formula("x1")
    assert f == Leaf(1, False) and size(f) == 1 and depth(f) == 1


def test_parse_two_level():
    f = parse_formula("(x1|x2)&(x3|x4)")
    assert f == And((Or((Leaf(1, False), Leaf(2, False))), Or((Leaf(3, False), Leaf(4, False)))))
    assert size(f) == 4 and depth(f) == 2


def test_parse_flattens_and_pushes_negation():
    f = parse_formula(" x1 | x2 | !(x3 & !x4) ")
    assert isinstance(f, Or) and len(f.children) == 4
    assert f.children[2] == Leaf(3, True) and f.children[3] == Leaf(4, False)
    assert parse_formula(to_text(f)) == f


def test_duplicate_variable_named():
    with pytest.raises(DuplicateVariableError, match="x1"):
        parse_formula("x1 & x1")


@pytest.mark.parametrize("text, pos", [("x1 &", 4), ("(x1 | x2", 8), ("x0", 0), ("x1 x2", 3), ("y1", 0)])
def test_syntax_error_position(text, pos):
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula(text)
    assert err.value.position == pos


def test_classical_examples():
    assert classical_eval(parse_formula("x1 | x2 | x3"), [0, 0, 0]) == 0
    assert classical_eval(parse_formula("x1 & x2 & x3"), [1, 1, 1]) == 1
    assert classical_eval(parse_formula("!x1 | x2"), [1, 0]) == 0
    with pytest.raises(ValueError):
        classical_eval(parse_formula("x1 & x3"), [1, 0])


def test_parse_assignment():
    assert parse_assignment("1010") == [1, 0, 1, 0]
    with pytest.raises(ValueError):
        parse_assignment("10a")


def test_de_morgan_sanity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        N = int(rng.integers(2, 40))
        d = int(rng.integers(1, min(4, N - 1) + 1))
        f = random_formula(N, d, rng)
        a = rng.integers(0, 2, N)
        assert classical_eval(dual(f), 1 - a) == 1 - classical_eval(f, a)
        assert classical_eval(negate(f), a) == 1 - classical_eval(f, a)


def test_random_formula_shape():
    rng = np.random.default_rng(1)
    for N, d in [(1, 1), (2, 1), (16, 3), (64, 2), (256, 3), (100, 5)]:
        f = random_formula(N, d, rng)
        assert size(f) == N and depth(f) == d
        assert sorted(l.var for l in leaves(f)) == list(range(1, N + 1))
    with pytest.raises(ValueError):
        random_formula(3, 3, rng)


def test_repetitions_push_child_error_below_inverse_square():
    # per-run success of a child search is at least 0.9 (the base-case target)
    for N in range(4, 5000):
        r = repetitions(N)
        assert r % 2 == 1
        assert 1 - majority_correct(0.9, r) <= 1 / N ** 2


def test_majority_correct_small_cases():
    assert majority_correct(0.8, 1) == pytest.approx(0.8)
    assert majority_correct(0.8, 3) == pytest.approx(0.8 ** 3 + 3 * 0.8 ** 2 * 0.2)


def test_eval_single_leaf():
    meter = CostMeter()
    rep = eval_readonce(parse_formula("x1"), [1], meter, np.random.default_rng(0))
    assert rep.value == 1 and rep.queries == 1 and meter.total == 1


def test_eval_two_level_example():
    meter = CostMeter()
    rep = eval_readonce(parse_formula("(x1|x2)&(x3|x4)"), [1, 0, 1, 0], meter, np.random.default_rng(0))
    assert rep.value == 1 == rep.classical
    assert rep.queries == meter.total
    assert rep.reps == {1: repetitions(4)}


def test_random_64_depth_2():
    base = load_baseline()
    C = base["readonce"]["2"]["C"] * base["tolerance"]
    agree, queries = 0, []
    for s in range(30):
        rng = np.random.default_rng([s, 64])
        f = random_formula(64, 2, rng)
        a = rng.integers(0, 2, 64)
        rep = eval_readonce(f, a, CostMeter(), rng)
        agree += rep.value == rep.classical
        queries.append(rep.queries)
        assert rep.p_correct >= 2 / 3 - 0.05
    assert agree / 30 >= 2 / 3
    assert np.mean(queries) <= C * math.sqrt(64) * math.log2(64)


def test_error_propagation_is_small():
    rng = np.random.default_rng(5)
    for N, d in [(64, 2), (128, 3), (256, 2)]:
        for _ in range(5):
            seed = int(rng.integers(1 << 30))
            f = random_formula(N, d, np.random.default_rng(seed))
            a = np.random.default_rng(seed + 1).integers(0, 2, N)
            real = eval_readonce(f, a, None, np.random.default_rng(seed + 2))
            ideal = eval_readonce(f, a, None, np.random.default_rng(seed + 2), ideal_children=True)
            assert abs(real.p_correct - ideal.p_correct) <= log2n(N) ** (d - 1) / math.sqrt(N)
