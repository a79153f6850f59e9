"""Dynamic sampling expansion driven by an EMA of the invalid-group ratio.

After each iteration the fraction of all-correct or all-incorrect groups
gives an oversampling ratio ``1 / (1 - rate)``; its moving average sets how
many prompts the next iteration rolls out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence


@dataclass(frozen=True)
class ExpansionState:
    ema: float = 1.0
    beta: float = 0.9
    cap: float = 4.0
    last_not_valid_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.cap < 1.0:
            raise ValueError("cap must be at least 1")
        if not 1.0 <= self.ema <= self.cap:
            raise ValueError(f"ema {self.ema} outside [1, {self.cap}]")
        if not 0.0 <= self.last_not_valid_rate <= 1.0:
            raise ValueError("not-valid rate must lie in [0, 1]")


def compute_ratio(not_valid_rate: float, cap: float = 4.0) -> float:
    """``1 / (1 - rate)`` clamped to [1, cap]; a rate of 1 yields the cap."""
    if not 0.0 <= not_valid_rate <= 1.0:
        raise ValueError(f"rate {not_valid_rate} outside [0, 1]")
    if not_valid_rate >= 1.0 - 1.0 / cap:
        return cap
    return min(cap, max(1.0, 1.0 / (1.0 - not_valid_rate)))


def update_ema(state: ExpansionState, observed_ratio: float) -> ExpansionState:
    if observed_ratio < 1.0:
        raise ValueError("observed ratio must be at least 1")
    ema = state.beta * state.ema + (1.0 - state.beta) * observed_ratio
    return replace(state, ema=min(state.cap, max(1.0, ema)))


def observe(state: ExpansionState, not_valid_rate: float) -> ExpansionState:
    """Record one iteration's invalid rate and fold its ratio into the EMA."""
    state = update_ema(state, compute_ratio(not_valid_rate, state.cap))
    return replace(state, last_not_valid_rate=not_valid_rate)


def plan_rollout_count(batch_size: int, state: ExpansionState) -> int:
    if batch_size < 1:
        raise ValueError("batch size must be at least 1")
    # round away float noise so that e.g. 256 * 1.5 is exactly 384
    return math.ceil(round(batch_size * state.ema, 9))


@dataclass(frozen=True)
class Selection:
    selected: list
    not_valid_rate: float
    shortfall: int


def select_informative(groups: Sequence, batch_size: int, group_size: int) -> Selection:
    """Keep up to ``batch_size`` mixed-correctness groups, most balanced first.

    Groups need ``sample_id`` and ``correct_count``. Balance is
    ``|correct - G/2|``; ties go to the smaller sample id.
    """
    for g in groups:
        if not 0 <= g.correct_count <= group_size:
            raise ValueError(f"{g.sample_id}: correct count {g.correct_count} outside [0, {group_size}]")
    valid = [g for g in groups if 0 < g.correct_count < group_size]
    rate = 1.0 - len(valid) / len(groups) if groups else 0.0
    valid.sort(key=lambda g: (abs(g.correct_count - group_size / 2), g.sample_id))
    chosen = valid[:batch_size]
    return Selection(chosen, rate, max(0, batch_size - len(chosen)))
