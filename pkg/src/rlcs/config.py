"""Experiment configuration: one JSON document, unknown keys rejected."""
from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from rlcs.curriculum import DEFAULT_EDGES, DEFAULT_TENT, CurriculumState
from rlcs.parser import StyleThresholds
from rlcs.rewards import DEFAULT_RTOL, RewardConfig


class ConfigInvalid(ValueError):
    pass


@dataclass
class CurriculumConfig:
    enabled: bool = True
    tier_edges: tuple[float, ...] = DEFAULT_EDGES
    tent: tuple[float, ...] = DEFAULT_TENT
    blend_factor: float = 0.8
    easy_damping: float = 1.0
    online_metric: str = "fraction"


@dataclass
class ExpansionConfig:
    enabled: bool = True
    beta: float = 0.9
    cap: float = 4.0


@dataclass
class StyleConfig:
    mixed_script_ratio: float = 0.3
    max_repeat_fraction: float = 0.3
    min_repeat_block: int = 8


@dataclass
class RewardParams:
    rtol: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_RTOL))
    tau: float = 0.5
    style: StyleConfig = field(default_factory=StyleConfig)
    grounding_matching: str = "greedy"
    success_threshold: float = 0.99


@dataclass
class SchedulerConfig:
    ranks: int = 4
    capacity: int = 32768
    cost_mode: str = "linear"


@dataclass
class LearnerConfig:
    learn_rate: float = 0.2
    skill_alpha: float = 1.0
    skill_beta: float = 1.5
    offline_k: int = 8
    length_base: float = 1500.0
    length_scale: float = 2.0
    length_sigma: float = 0.5
    length_cap: int = 8192
    truncation_penalty: float = 0.8


@dataclass
class JudgeConfig:
    backend: str = "stub"
    url: str | None = None
    table: str | None = None
    timeout: float = 10.0
    retries: int = 2
    prompt: str | None = None
    cache: bool = False


@dataclass
class DatasetConfig:
    size: int = 256
    domain_mix: dict[str, float] = field(
        default_factory=lambda: {"math": 0.5, "ocr": 0.25, "grounding": 0.25}
    )
    human_tier_fraction: float = 0.2


@dataclass
class ExperimentConfig:
    seed: int = 0
    iterations: int = 300
    batch_size: int = 32
    group_size: int = 8
    workers: int = 1
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    reward: RewardParams = field(default_factory=RewardParams)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    judge: JudgeConfig = field(default_factory=JudgeConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)

    def validate(self) -> "ExperimentConfig":
        checks = [
            (self.iterations >= 0, "iterations must be nonnegative"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.group_size >= 2, "group_size must be at least 2"),
            (self.workers >= 1, "workers must be at least 1"),
            (0 <= self.expansion.beta < 1, "expansion.beta must lie in [0, 1)"),
            (self.expansion.cap >= 1, "expansion.cap must be at least 1"),
            (0 < self.reward.tau < 1, "reward.tau must lie in (0, 1)"),
            (all(v > 0 for v in self.reward.rtol.values()), "reward.rtol values must be positive"),
            (0 < self.reward.success_threshold <= 1, "reward.success_threshold must lie in (0, 1]"),
            (self.reward.grounding_matching in ("greedy", "optimal"), "reward.grounding_matching must be greedy or optimal"),
            (self.scheduler.ranks >= 1, "scheduler.ranks must be at least 1"),
            (self.scheduler.capacity >= 1, "scheduler.capacity must be positive"),
            (self.scheduler.cost_mode in ("linear", "quadratic"), "scheduler.cost_mode must be linear or quadratic"),
            (self.learner.learn_rate >= 0, "learner.learn_rate must be nonnegative"),
            (self.learner.skill_alpha > 0 and self.learner.skill_beta > 0, "skill prior parameters must be positive"),
            (self.learner.offline_k >= 1, "learner.offline_k must be at least 1"),
            (self.learner.length_cap >= 1, "learner.length_cap must be positive"),
            (0 <= self.learner.truncation_penalty <= 1, "learner.truncation_penalty must lie in [0, 1]"),
            (self.judge.backend in ("stub", "fallback", "remote"), "judge.backend must be stub, fallback or remote"),
            (self.dataset.size >= 1, "dataset.size must be positive"),
            (all(v >= 0 for v in self.dataset.domain_mix.values()) and sum(self.dataset.domain_mix.values()) > 0,
             "dataset.domain_mix must be nonnegative with a positive total"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigInvalid(msg)
        try:
            self.curriculum_state()
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigInvalid(f"curriculum: {exc}") from None
        return self

    def curriculum_state(self) -> CurriculumState:
        c = self.curriculum
        total = sum(c.tent)
        return CurriculumState(
            tier_edges=tuple(c.tier_edges),
            tier_weights=tuple(t / total for t in c.tent),
            blend_factor=c.blend_factor,
            tent=tuple(c.tent),
            easy_damping=c.easy_damping,
            online_metric=c.online_metric,
        )

    def reward_config(self) -> RewardConfig:
        r = self.reward
        return RewardConfig(
            rtol=dict(r.rtol),
            tau=r.tau,
            style=StyleThresholds(r.style.mixed_script_ratio, r.style.max_repeat_fraction, r.style.min_repeat_block),
            grounding_matching=r.grounding_matching,
        )


def _build(tp: Any, value: Any, path: str) -> Any:
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigInvalid(f"{path or 'config'}: expected an object")
        hints = typing.get_type_hints(tp)
        names = {f.name for f in dataclasses.fields(tp)}
        unknown = sorted(set(value) - names)
        if unknown:
            raise ConfigInvalid(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
        kwargs = {k: _build(hints[k], v, f"{path}.{k}" if path else k) for k, v in value.items()}
        return tp(**kwargs)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _build(inner[0], value, path)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigInvalid(f"{path}: expected a list")
        return tuple(_build(args[0], v, path) for v in value)
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigInvalid(f"{path}: expected an object")
        return {str(k): _build(args[1], v, f"{path}.{k}") for k, v in value.items()}
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigInvalid(f"{path}: expected a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(f"{path}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(f"{path}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigInvalid(f"{path}: expected a string")
        return value
    raise ConfigInvalid(f"{path}: unsupported type {tp}")


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "").validate()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    def conv(v):
        if isinstance(v, tuple):
            return [conv(x) for x in v]
        if isinstance(v, dict):
            return {k: conv(x) for k, x in v.items()}
        return v

    return conv(dataclasses.asdict(cfg))


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: invalid JSON: {exc}") from None
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)
