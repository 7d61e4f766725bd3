import math

import numpy as np
import pytest

from vtsearch.model import (
    CostMeter,
    Instance,
    format_instance,
    parse_instance,
    random_subset_chain,
    run_item,
    subset_energy_bound_check,
)


def test_run_item_boundary():
    inst = Instance.from_arrays([5], [1])
    meter = CostMeter()
    assert run_item(inst, 0, 5, meter) == 1
    assert run_item(inst, 0, 4, meter) is None
    assert meter.total == 9


def test_early_stop_and_strict_charging():
    inst = Instance.from_arrays([1], [0])
    meter = CostMeter()
    assert run_item(inst, 0, 8, meter) == 0
    assert meter.total == 1
    strict = CostMeter(strict=True)
    run_item(inst, 0, 8, strict)
    assert strict.total == 8


def test_run_item_monotone_in_steps():
    rng = np.random.default_rng(3)
    inst = Instance.from_arrays(rng.integers(1, 20, 30), rng.integers(0, 2, 30))
    for i in range(inst.n):
        seen = [run_item(inst, i, s, CostMeter()) for s in range(1, 25)]
        done = [v for v in seen if v is not None]
        assert len(set(done)) <= 1
        first = next((k for k, v in enumerate(seen) if v is not None), len(seen))
        assert all(v is not None for v in seen[first:])


def test_run_item_bad_index():
    inst = Instance.from_arrays([1, 2], [0, 1])
    with pytest.raises(IndexError):
        run_item(inst, 2, 1, CostMeter())


def test_meter_is_additive():
    inst = Instance.from_arrays([3, 7, 2], [0, 1, 0])
    meter = CostMeter()
    charges = []
    for i, s in [(0, 5), (1, 4), (2, 2), (1, 9)]:
        before = meter.total
        run_item(inst, i, s, meter)
        charges.append(meter.total - before)
    assert charges == [3, 4, 2, 7]
    assert meter.total == sum(charges)


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance.from_arrays([], [])
    with pytest.raises(ValueError):
        Instance.from_arrays([0], [1])
    with pytest.raises(ValueError):
        Instance.from_arrays([1], [2])


def test_subset_chain_sizes():
    rng = np.random.default_rng(0)
    assert [len(s) for s in random_subset_chain(Instance.from_arrays([1], [1]), rng)] == [1]
    assert [len(s) for s in random_subset_chain(Instance.from_arrays([1] * 4, [0] * 4), rng)] == [4, 2, 1]
    chain = random_subset_chain(Instance.from_arrays([1] * 10, [0] * 10), rng)
    assert [len(s) for s in chain] == [10, 5, 3, 2, 1]
    assert all(len(set(s.tolist())) == len(s) for s in chain)


def test_energy_check_equal_times():
    rng = np.random.default_rng(1)
    chk = subset_energy_bound_check(Instance.from_arrays([1] * 4, [0] * 4), 1, 200, rng)
    assert chk.mean == pytest.approx(math.sqrt(2), abs=1e-12)
    assert chk.bound == pytest.approx(math.sqrt(2), abs=1e-12)
    chk = subset_energy_bound_check(Instance.from_arrays([1] * 64, [0] * 64), 1, 50, rng)
    assert chk.mean == pytest.approx(math.sqrt(32), abs=1e-12)


def test_energy_check_two_items():
    chk = subset_energy_bound_check(Instance.from_arrays([3, 4], [0, 0]), 1, 100_000, np.random.default_rng(2))
    assert chk.bound == pytest.approx(5 / math.sqrt(2))
    assert abs(chk.mean - 3.5) < 3 * chk.stderr + 1e-9


def test_energy_check_ramp():
    chk = subset_energy_bound_check(Instance.from_arrays(np.arange(1, 17), [0] * 16), 2, 100_000,
                                    np.random.default_rng(4))
    assert chk.mean <= chk.bound + 3 * chk.stderr


def test_instance_text_roundtrip():
    inst = Instance.from_arrays([5, 3, 7], [0, 1, 0])
    text = format_instance(inst)
    assert text == "3\n5 0\n3 1\n7 0\n"
    again = parse_instance(text)
    assert again.times.tolist() == [5, 3, 7] and again.bits.tolist() == [0, 1, 0]


@pytest.mark.parametrize("text, field", [
    ("", "n"),
    ("x\n1 1\n", "field n"),
    ("2\n1 1\n", "expected 2"),
    ("1\n0 1\n", "t_i"),
    ("1\n1 3\n", "x_i"),
])
def test_instance_parse_errors(text, field):
    with pytest.raises(ValueError, match=field):
        parse_instance(text)
