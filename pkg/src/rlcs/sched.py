"""Rollout-to-training scheduling: rank balancing, micro-step packing, and
sample-count weighting of micro-step results."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from rlcs import kernels

DEFAULT_CAPACITY = 32768


class ItemExceedsCapacity(ValueError):
    def __init__(self, item_id: str, length: int, capacity: int):
        super().__init__(f"item {item_id!r} has length {length} > capacity {capacity}")
        self.item_id = item_id


class EmptySample(ValueError):
    pass


@dataclass(frozen=True)
class WorkItem:
    id: str
    length: int
    cost: float | None = None

    def __post_init__(self):
        if int(self.length) != self.length or self.length < 1:
            raise ValueError(f"{self.id}: length must be a positive integer")
        if self.cost is None:
            object.__setattr__(self, "cost", float(self.length))
        elif not self.cost > 0:
            raise ValueError(f"{self.id}: cost must be positive")


def with_cost_mode(items: Sequence[WorkItem], mode: str = "linear") -> list[WorkItem]:
    """Set each item's compute cost from its length: tokens, or tokens squared."""
    if mode == "linear":
        return [WorkItem(it.id, it.length, float(it.length)) for it in items]
    if mode == "quadratic":
        return [WorkItem(it.id, it.length, float(it.length) ** 2) for it in items]
    raise ValueError(f"unknown cost mode {mode!r}")


@dataclass(frozen=True)
class RankAssignment:
    rank_of: dict[str, int]
    loads: list[float]

    @property
    def max_load(self) -> float:
        return max(self.loads)


@dataclass(frozen=True)
class MicroStepPlan:
    bins: list[list[str]]
    capacity: int = DEFAULT_CAPACITY

    @property
    def n_bins(self) -> int:
        return len(self.bins)


def balance_ranks(items: Sequence[WorkItem], ranks: int) -> RankAssignment:
    """Longest-processing-time greedy on cost. Ties: item id, then lowest rank."""
    if ranks < 1:
        raise ValueError("need at least one rank")
    if not items:
        raise ValueError("no items to balance")
    order = sorted(items, key=lambda it: (-it.cost, it.id))
    rank_of, loads = kernels.lpt([it.cost for it in order], ranks)
    return RankAssignment({it.id: r for it, r in zip(order, rank_of)}, list(loads))


def pack_microsteps(items: Sequence[WorkItem], capacity: int = DEFAULT_CAPACITY) -> MicroStepPlan:
    """First-fit-decreasing by length into bins of ``capacity`` tokens."""
    for it in items:
        if it.length > capacity:
            raise ItemExceedsCapacity(it.id, it.length, capacity)
    order = sorted(items, key=lambda it: (-it.length, it.id))
    bin_of, n_bins = kernels.ffd([it.length for it in order], capacity)
    bins: list[list[str]] = [[] for _ in range(n_bins)]
    for it, b in zip(order, bin_of):
        bins[b].append(it.id)
    return MicroStepPlan(bins, capacity)


def naive_microsteps(items: Sequence[WorkItem], capacity: int = DEFAULT_CAPACITY) -> MicroStepPlan:
    """One sample per micro-step; the baseline packing is measured against."""
    for it in items:
        if it.length > capacity:
            raise ItemExceedsCapacity(it.id, it.length, capacity)
    return MicroStepPlan([[it.id] for it in items], capacity)


def weighted_gradient(micro_values: Sequence[tuple[float, int]]) -> float:
    """Average per-micro-step values weighted by their sample counts."""
    if not micro_values:
        raise ValueError("no micro-steps")
    total = 0
    acc = 0.0
    for value, count in micro_values:
        if count < 1:
            raise ValueError("every micro-step must hold at least one sample")
        acc += value * count
        total += count
    return acc / total


def aggregate_loss(token_losses: Sequence[Sequence[float]], mode: str = "per_sample") -> float:
    """per_sample: mean of sample means. per_token: mean of all tokens pooled."""
    if not token_losses:
        raise EmptySample("no samples")
    for i, s in enumerate(token_losses):
        if len(s) == 0:
            raise EmptySample(f"sample {i} has no tokens")
    if mode == "per_sample":
        return sum(sum(s) / len(s) for s in token_losses) / len(token_losses)
    if mode == "per_token":
        return sum(sum(s) for s in token_losses) / sum(len(s) for s in token_losses)
    raise ValueError(f"unknown aggregation mode {mode!r}")
