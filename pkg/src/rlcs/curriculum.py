"""Difficulty tiers, online grading, and tier re-weighting for curriculum sampling.

Tier 0 is the hardest bucket (lowest pass rate), tier T-1 the easiest.
"""
from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

DEFAULT_EDGES = (0.1, 0.3, 0.7, 0.9)
DEFAULT_TENT = (0.1, 0.2, 0.4, 0.2, 0.1)


class TierOutOfRange(ValueError):
    pass


class AllTiersEmpty(ValueError):
    pass


class PoolExhausted(UserWarning):
    """More samples were requested than the pool holds; the whole pool was returned."""


def bucket(rate: float, edges: Sequence[float]) -> int:
    """Tier index of a pass rate: the number of edges at or below it."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"pass rate {rate} outside [0, 1]")
    return bisect.bisect_right(edges, rate)


def tier_midpoints(edges: Sequence[float]) -> list[float]:
    bounds = [0.0, *edges, 1.0]
    return [(lo + hi) / 2 for lo, hi in zip(bounds, bounds[1:])]


@dataclass(frozen=True)
class TaskSample:
    id: str
    domain: str
    prompt: str
    reference: str
    offline_tier: int
    blended_pass_rate: float
    exposures: int = 0
    tier: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.blended_pass_rate <= 1.0:
            raise ValueError(f"{self.id}: blended_pass_rate {self.blended_pass_rate} outside [0, 1]")
        if self.offline_tier < 0:
            raise TierOutOfRange(f"{self.id}: negative offline tier")
        if self.tier is None:
            object.__setattr__(self, "tier", self.offline_tier)


@dataclass(frozen=True)
class CurriculumState:
    tier_edges: tuple[float, ...] = DEFAULT_EDGES
    tier_weights: tuple[float, ...] = DEFAULT_TENT
    blend_factor: float = 0.8
    tent: tuple[float, ...] = DEFAULT_TENT
    easy_damping: float = 1.0
    online_metric: str = "fraction"

    def __post_init__(self):
        edges = self.tier_edges
        if any(not 0.0 < e < 1.0 for e in edges) or any(a >= b for a, b in zip(edges, edges[1:])):
            raise ValueError(f"tier edges must be strictly ascending in (0, 1): {edges}")
        if self.tier_count < 3:
            raise ValueError("need at least 3 tiers")
        if len(self.tier_weights) != self.tier_count or len(self.tent) != self.tier_count:
            raise ValueError("weights and tent must have one entry per tier")
        if any(w < 0 for w in self.tier_weights) or not math.isclose(sum(self.tier_weights), 1.0, abs_tol=1e-9):
            raise ValueError(f"tier weights must form a probability vector: {self.tier_weights}")
        if any(t <= 0 for t in self.tent):
            raise ValueError("tent weights must be positive")
        if not 0.0 <= self.blend_factor <= 1.0:
            raise ValueError("blend_factor must lie in [0, 1]")
        if not 0.0 <= self.easy_damping <= 1.0:
            raise ValueError("easy_damping must lie in [0, 1]")
        if self.online_metric not in ("fraction", "pass_at_k"):
            raise ValueError(f"unknown online metric {self.online_metric!r}")

    @property
    def tier_count(self) -> int:
        return len(self.tier_edges) + 1

    def tier_of(self, rate: float) -> int:
        return bucket(rate, self.tier_edges)


def grade_offline(
    pass_rates: Mapping[str, float],
    human_tiers: Mapping[str, int] | None = None,
    edges: Sequence[float] = DEFAULT_EDGES,
) -> dict[str, int]:
    """Bucket offline pass@k rates, averaging with a human tier where one exists.

    The average rounds half up, so buckets 3 and 0 blend to 2.
    """
    human_tiers = human_tiers or {}
    t = len(edges) + 1
    out = {}
    for sid, rate in pass_rates.items():
        tier = bucket(rate, edges)
        if sid in human_tiers:
            h = human_tiers[sid]
            if not 0 <= h < t:
                raise TierOutOfRange(f"{sid}: human tier {h} outside [0, {t})")
            tier = (tier + h + 1) // 2
        out[sid] = tier
    return out


def grade_online(sample: TaskSample, group_correct: int, group_size: int,
                 state: CurriculumState = CurriculumState()) -> TaskSample:
    """Fold one rollout group's outcome into the sample's blended pass rate."""
    if group_size < 1 or not 0 <= group_correct <= group_size:
        raise ValueError(f"need 0 <= correct ({group_correct}) <= G ({group_size})")
    if state.online_metric == "pass_at_k":
        observed = 1.0 if group_correct > 0 else 0.0
    else:
        observed = group_correct / group_size
    b = state.blend_factor
    rate = min(1.0, max(0.0, b * sample.blended_pass_rate + (1.0 - b) * observed))
    return replace(sample, blended_pass_rate=rate, exposures=sample.exposures + 1,
                   tier=state.tier_of(rate))


def tier_populations(samples: Sequence[TaskSample], tier_count: int) -> list[int]:
    pops = [0] * tier_count
    for s in samples:
        pops[s.tier] += 1
    return pops


def reweight(state: CurriculumState, populations: Sequence[int]) -> CurriculumState:
    """Tent weights peaked mid-curriculum, restricted to nonempty tiers.

    The easiest nonempty tier is damped further by how far its population
    share exceeds an even split across nonempty tiers.
    """
    if len(populations) != state.tier_count:
        raise ValueError("one population count per tier is required")
    total = sum(populations)
    nonempty = [p > 0 for p in populations]
    if total == 0:
        raise AllTiersEmpty("every tier is empty")
    w = [t if ne else 0.0 for t, ne in zip(state.tent, nonempty)]
    easiest = max(i for i, ne in enumerate(nonempty) if ne)
    excess = max(0.0, populations[easiest] / total - 1.0 / sum(nonempty))
    w[easiest] *= 1.0 - state.easy_damping * excess
    z = sum(w)
    return replace(state, tier_weights=tuple(x / z for x in w))


def uniform_state(state: CurriculumState, populations: Sequence[int]) -> CurriculumState:
    """Weights proportional to tier populations: plain uniform sampling over samples."""
    total = sum(populations)
    if total == 0:
        raise AllTiersEmpty("every tier is empty")
    return replace(state, tier_weights=tuple(p / total for p in populations))


def draw_batch(state: CurriculumState, samples: Sequence[TaskSample], n: int,
               rng: int | np.random.Generator) -> list[TaskSample]:
    """Pick a tier by weight, then a sample uniformly from what remains in it.

    Draws within one batch are without replacement. Once every positively
    weighted tier is used up, remaining tiers are drawn in proportion to
    what they still hold.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not samples:
        raise ValueError("sample pool is empty")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    if n > len(samples):
        warnings.warn(f"requested {n} samples from a pool of {len(samples)}", PoolExhausted, stacklevel=2)
        n = len(samples)
    pools: list[list[TaskSample]] = [[] for _ in range(state.tier_count)]
    for s in samples:
        pools[s.tier].append(s)
    weights = list(state.tier_weights)
    out = []
    for _ in range(n):
        live = [weights[t] if pools[t] else 0.0 for t in range(len(pools))]
        if sum(live) <= 0.0:
            live = [float(len(p)) for p in pools]
        cum = np.cumsum(live)
        t = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(pools) - 1)
        while not pools[t]:  # guards float edge cases at the top of the range
            t -= 1
        pool = pools[t]
        k = int(rng.integers(len(pool)))
        pool[k], pool[-1] = pool[-1], pool[k]
        out.append(pool.pop())
    return out


def sample_from_record(rec: Mapping, state: CurriculumState = CurriculumState(),
                       pass_rate: float | None = None) -> TaskSample:
    """Build a TaskSample from a dataset record.

    The offline tier comes from the record, or from ``pass_rate`` (blended
    with ``human_tier`` when present); the blended rate starts at the tier's
    midpoint.
    """
    t = state.tier_count
    tier = rec.get("offline_tier")
    if tier is None:
        if pass_rate is None:
            raise ValueError(f"{rec.get('id')}: no offline_tier and no pass rate to grade")
        human = {rec["id"]: rec["human_tier"]} if rec.get("human_tier") is not None else None
        tier = grade_offline({rec["id"]: pass_rate}, human, state.tier_edges)[rec["id"]]
    if not 0 <= tier < t:
        raise TierOutOfRange(f"{rec.get('id')}: offline tier {tier} outside [0, {t})")
    return TaskSample(
        id=str(rec["id"]),
        domain=str(rec.get("domain", "math")),
        prompt=str(rec.get("prompt", "")),
        reference=str(rec.get("reference", "")),
        offline_tier=int(tier),
        blended_pass_rate=tier_midpoints(state.tier_edges)[tier],
    )


__all__ = [
    "TaskSample", "CurriculumState", "TierOutOfRange", "AllTiersEmpty", "PoolExhausted",
    "bucket", "grade_offline", "grade_online", "reweight", "uniform_state", "draw_batch",
    "tier_populations", "tier_midpoints", "sample_from_record",
]
