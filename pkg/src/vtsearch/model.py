"""The variable-time oracle model: instances, cost metering, random subsets.

Item indices are 0-based everywhere in the Python API.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

RESULT_FIELDS = ("seed", "n", "sum_t2", "algorithm", "cost", "success", "found_index")


@dataclass(frozen=True)
class ItemSpec:
    t: int
    x: int

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 1:
            raise ValueError(f"evaluation time must be an integer >= 1, got {self.t!r}")
        if self.x not in (0, 1):
            raise ValueError(f"item bit must be 0 or 1, got {self.x!r}")


@dataclass(frozen=True)
class Instance:
    """Items with hidden evaluation times ``t`` and hidden bits ``x``."""

    items: tuple[ItemSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("an instance needs at least one item")

    @classmethod
    def from_arrays(cls, times: Sequence[int], bits: Sequence[int]) -> "Instance":
        if len(times) != len(bits):
            raise ValueError("times and bits differ in length")
        return cls(tuple(ItemSpec(int(t), int(x)) for t, x in zip(times, bits)))

    @property
    def n(self) -> int:
        return len(self.items)

    @cached_property
    def times(self) -> np.ndarray:
        a = np.array([it.t for it in self.items], dtype=np.int64)
        a.flags.writeable = False
        return a

    @cached_property
    def bits(self) -> np.ndarray:
        a = np.array([it.x for it in self.items], dtype=np.int8)
        a.flags.writeable = False
        return a

    @property
    def sum_t2(self) -> int:
        return int(np.sum(self.times.astype(np.float64) ** 2))

    @property
    def marked(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def subset(self, indices) -> "Instance":
        return Instance(tuple(self.items[int(i)] for i in indices))


@dataclass
class CostMeter:
    """Accumulates oracle steps.  Only time spent running item evaluators counts.

    With ``strict=False`` an evaluator that finishes early is charged only
    for the steps it actually needed; ``strict=True`` charges every
    requested step.
    """

    strict: bool = False
    total: int = 0

    def charge(self, steps) -> None:
        steps = int(steps)
        if steps < 0:
            raise ValueError("cannot charge a negative number of steps")
        self.total += steps


def run_item(instance: Instance, i: int, steps: int, meter: CostMeter) -> int | None:
    """Run the evaluator of item ``i`` for ``steps`` steps.

    Returns the item's bit if ``steps >= t_i`` and ``None`` (computation not
    complete) otherwise.
    """
    if not 0 <= i < instance.n:
        raise IndexError(f"item index {i} out of range for n={instance.n}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    item = instance.items[i]
    meter.charge(steps if meter.strict else min(steps, item.t))
    return item.x if steps >= item.t else None


def random_subset_chain(instance: Instance, rng: np.random.Generator) -> list[np.ndarray]:
    """Independent uniform subsets of sizes n, ceil(n/2), ceil(n/4), ..., 1.

    Each element is a sorted array of item indices.
    """
    n = instance.n
    chain = [np.arange(n)]
    size = n
    while size > 1:
        size = math.ceil(size / 2)
        chain.append(np.sort(rng.choice(n, size=size, replace=False)))
    return chain


class EnergyCheck(NamedTuple):
    mean: float
    bound: float
    stderr: float


def subset_energy_bound_check(instance: Instance, j: int, trials: int,
                              rng: np.random.Generator) -> EnergyCheck:
    """Monte-Carlo mean of ``sqrt(sum_{i in S} t_i^2)`` over random S of size n // 2^j.

    Returns the mean, the bound ``2^(-j/2) sqrt(sum t_i^2)`` and the standard
    error of the mean.
    """
    n = instance.n
    if 2 ** j > n:
        raise ValueError("need 2^j <= n")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    size = n // 2 ** j
    t2 = instance.times.astype(np.float64) ** 2
    chunk = max(1, 2_000_000 // n)
    values = []
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        keys = rng.random((c, n))
        idx = np.argpartition(keys, size - 1, axis=1)[:, :size]
        values.append(np.sqrt(t2[idx].sum(axis=1)))
        done += c
    v = np.concatenate(values)
    stderr = float(v.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bound = 2.0 ** (-j / 2) * math.sqrt(t2.sum())
    return EnergyCheck(float(v.mean()), bound, stderr)


def parse_instance(text: str) -> Instance:
    """Parse the instance text format: ``n`` then n lines ``t_i x_i``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("instance: empty input, expected item count n on the first line")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"instance: field n is not an integer: {lines[0]!r}") from None
    if n < 1:
        raise ValueError("instance: field n must be >= 1")
    if len(lines) - 1 != n:
        raise ValueError(f"instance: expected {n} item lines, found {len(lines) - 1}")
    times, bits = [], []
    for k, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"instance line {k}: expected 't_i x_i'")
        try:
            t, x = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"instance line {k}: fields t_i and x_i must be integers") from None
        if t < 1:
            raise ValueError(f"instance line {k}: field t_i must be >= 1")
        if x not in (0, 1):
            raise ValueError(f"instance line {k}: field x_i must be 0 or 1")
        times.append(t)
        bits.append(x)
    return Instance.from_arrays(times, bits)


def format_instance(instance: Instance) -> str:
    rows = [str(instance.n)] + [f"{it.t} {it.x}" for it in instance.items]
    return "\n".join(rows) + "\n"


def load_instance(path) -> Instance:
    return parse_instance(Path(path).read_text())


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(format_instance(instance))
