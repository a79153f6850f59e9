"""Synthetic policy for exercising the RL loop without a language model.

Each sample has a latent pass probability. Rollout groups draw correctness
from it, think lengths from a difficulty-dependent log-normal, and
over-long thinking is force-closed. Training nudges the pass probability of
every sample that made it into the batch along a logistic curve.
"""
from __future__ import annotations

import math
import string
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from rlcs import curriculum as cur
from rlcs import expansion as exp
from rlcs.config import ConfigInvalid, ExperimentConfig
from rlcs.parser import THINK_CLOSE, THINK_OPEN, StructuredResponse, render_response, surrogate_tokens
from rlcs.rewards import Box, parse_boxes, verify_grounding, verify_ocr
from rlcs.sched import WorkItem, balance_ranks, pack_microsteps, with_cost_mode

FORCED_ANSWER = "[forced answer]"


@dataclass(frozen=True)
class LengthModel:
    """Think length ~ LogNormal(log(base * (1 + scale * (1 - p))), sigma)."""

    base: float = 1500.0
    scale: float = 2.0
    sigma: float = 0.5

    def median(self, p: float) -> float:
        return self.base * (1.0 + self.scale * (1.0 - p))


@dataclass(frozen=True)
class SyntheticLearner:
    skill: Mapping[str, float]
    learn_rate: float = 0.2
    length_model: LengthModel = field(default_factory=LengthModel)
    truncation_penalty: float = 0.8

    def __post_init__(self):
        if any(not 0.0 <= p <= 1.0 for p in self.skill.values()):
            raise ValueError("latent pass probabilities must lie in [0, 1]")
        if self.learn_rate < 0:
            raise ValueError("learn rate must be nonnegative")

    def mean_skill(self) -> float:
        return math.fsum(self.skill.values()) / len(self.skill) if self.skill else 0.0


@dataclass(frozen=True)
class RolloutGroup:
    sample_id: str
    responses: tuple[StructuredResponse, ...]
    rewards: tuple[float, ...]
    correct_count: int
    valid: bool

    @property
    def advantages(self) -> list[float]:
        """Group-relative advantages; exactly zero for uninformative groups."""
        if not self.valid:
            return [0.0] * len(self.rewards)
        return group_advantages(self.rewards)


def truncated_success_probability(p: float, penalty: float) -> float:
    return p * penalty


def force_answer(resp: StructuredResponse, length_cap: int, answer: str | None = None) -> StructuredResponse:
    """Close an over-long think section at the cap and attach an answer.

    Responses under the cap come back unchanged.
    """
    if resp.token_length < length_cap:
        return resp
    think = " ".join(resp.think_content.split()[:length_cap])
    answer = answer or resp.answer_content or FORCED_ANSWER
    raw = render_response(think, answer, answer_tags=False)
    return replace(
        resp,
        raw_text=raw,
        think_content=think,
        answer_content=answer,
        truncated=True,
        token_length=length_cap + surrogate_tokens(answer),
    )


def group_advantages(rewards: Sequence[float], eps: float = 1e-6) -> list[float]:
    """(r - mean) / (std + eps) with the population std; all-equal groups give zeros."""
    if not rewards:
        raise ValueError("rewards must be nonempty")
    n = len(rewards)
    if max(rewards) == min(rewards):
        return [0.0] * n
    mean = math.fsum(rewards) / n
    centred = [r - mean for r in rewards]
    # second pass removes the rounding residue of the first mean
    residue = math.fsum(centred) / n
    centred = [c - residue for c in centred]
    std = math.sqrt(math.fsum(c * c for c in centred) / n)
    return [c / (std + eps) for c in centred]


def train_step(learner: SyntheticLearner, groups: Sequence[RolloutGroup]) -> SyntheticLearner:
    eta = learner.learn_rate
    if eta == 0 or not groups:
        return learner
    skill = dict(learner.skill)
    for g in groups:
        p = skill[g.sample_id]
        skill[g.sample_id] = min(1.0, max(0.0, p + eta * p * (1.0 - p)))
    return replace(learner, skill=skill)


# ---------------------------------------------------------------- payloads

_LETTERS = string.ascii_letters


def _corrupt_text(ref: str, rng: np.random.Generator, frac: float = 0.3) -> str:
    if not ref:
        return "x"
    chars = list(ref)
    k = max(1, round(frac * len(chars)))
    for i in rng.choice(len(chars), size=min(k, len(chars)), replace=False):
        c = chars[i]
        while c == chars[i]:
            c = _LETTERS[int(rng.integers(len(_LETTERS)))]
        chars[i] = c
    return "".join(chars)


def _jitter(box: Box, rng: np.random.Generator) -> Box:
    d = rng.integers(-1, 2, size=4)
    x1 = min(max(box.x1 + d[0], 0), 999)
    y1 = min(max(box.y1 + d[1], 0), 999)
    x2 = min(max(box.x2 + d[2], x1 + 1), 1000)
    y2 = min(max(box.y2 + d[3], y1 + 1), 1000)
    return Box(float(x1), float(y1), float(x2), float(y2))


def _displace(box: Box) -> Box:
    w = box.x2 - box.x1
    if box.x2 + w <= 1000:
        return Box(box.x2, box.y1, box.x2 + w, box.y2)
    return Box(box.x1 - w, box.y1, box.x1, box.y2)


@dataclass
class _Draft:
    sample: cur.TaskSample
    responses: list[StructuredResponse]
    correct: list[bool]
    payloads: list


def generate_group(
    learner: SyntheticLearner,
    sample: cur.TaskSample,
    group_size: int,
    length_cap: int,
    rng: np.random.Generator,
    gt_boxes: Sequence[Box] | None = None,
) -> _Draft:
    """All random draws for one group; scoring happens separately."""
    if group_size < 2:
        raise ValueError("group size must be at least 2")
    p = learner.skill[sample.id]
    lm = learner.length_model
    lengths = rng.lognormal(math.log(lm.median(p)), lm.sigma, size=group_size)
    draws = rng.random(group_size)
    responses, correct, payloads = [], [], []
    for length, u in zip(lengths, draws):
        n_tok = max(1, int(length))
        resp = StructuredResponse(
            raw_text="",
            think_content=f"reasoning:{n_tok}",
            answer_content="",
            token_length=n_tok,
        )
        prob = p
        if n_tok >= length_cap:
            resp = force_answer(resp, length_cap)
            prob = truncated_success_probability(p, learner.truncation_penalty)
        ok = bool(u < prob)
        if sample.domain == "ocr":
            payload = sample.reference if ok else _corrupt_text(sample.reference, rng)
        elif sample.domain == "grounding":
            if ok:
                payload = [_jitter(b, rng) for b in gt_boxes]
            else:
                k = int(rng.integers(len(gt_boxes)))
                payload = [_displace(b) if i == k else b for i, b in enumerate(gt_boxes)]
        else:
            payload = ok
        responses.append(resp)
        correct.append(ok)
        payloads.append(payload)
    return _Draft(sample, responses, correct, payloads)


def verify_group(draft: _Draft, success_threshold: float = 0.99, tau: float = 0.5,
                 gt_boxes: Sequence[Box] | None = None) -> RolloutGroup:
    """Score a drafted group. Pure: the result depends only on the draft."""
    sample = draft.sample
    rewards, responses = [], []
    for resp, payload in zip(draft.responses, draft.payloads):
        if sample.domain == "ocr":
            r = verify_ocr(payload, sample.reference).score
            answer = payload
        elif sample.domain == "grounding":
            r = verify_grounding(payload, gt_boxes, tau).score
            answer = "[" + ",".join(f"[{b.x1:g},{b.y1:g},{b.x2:g},{b.y2:g}]" for b in payload) + "]"
        else:
            r = 1.0 if payload else 0.0
            answer = sample.reference if payload else f"not {sample.reference}"
        rewards.append(r)
        if not resp.truncated:
            resp = replace(resp, answer_content=answer,
                           raw_text=f"{THINK_OPEN}{resp.think_content}{THINK_CLOSE}{answer}",
                           token_length=resp.token_length + 1)
        else:
            resp = replace(resp, answer_content=answer,
                           raw_text=render_response(resp.think_content, answer, answer_tags=False))
        responses.append(resp)
    n_correct = sum(1 for r in rewards if r >= success_threshold)
    g = len(rewards)
    return RolloutGroup(sample.id, tuple(responses), tuple(rewards), n_correct, 0 < n_correct < g)


def rollout_group(
    learner: SyntheticLearner,
    sample: cur.TaskSample,
    group_size: int,
    length_cap: int,
    rng: np.random.Generator,
    success_threshold: float = 0.99,
    tau: float = 0.5,
) -> RolloutGroup:
    gt = parse_boxes(sample.reference) if sample.domain == "grounding" else None
    draft = generate_group(learner, sample, group_size, length_cap, rng, gt)
    return verify_group(draft, success_threshold, tau, gt)


# ---------------------------------------------------------------- datasets

def make_synthetic_dataset(size: int, domain_mix: Mapping[str, float], seed: int,
                           human_tier_fraction: float = 0.2, tier_count: int = 5) -> list[dict]:
    """Dataset records in the ingestion format, with small concrete references."""
    rng = np.random.default_rng([seed, 7])
    domains = sorted(domain_mix)
    probs = np.array([domain_mix[d] for d in domains], dtype=float)
    probs /= probs.sum()
    records = []
    for i in range(size):
        domain = domains[int(rng.choice(len(domains), p=probs))]
        if domain == "ocr":
            n = int(rng.integers(8, 25))
            ref = "".join(_LETTERS[int(k)] for k in rng.integers(len(_LETTERS), size=n))
        elif domain == "grounding":
            boxes = []
            for _ in range(int(rng.integers(1, 4))):
                x1, y1 = (int(v) for v in rng.integers(0, 800, size=2))
                w, h = (int(v) for v in rng.integers(40, 200, size=2))
                boxes.append([x1, y1, min(x1 + w, 1000), min(y1 + h, 1000)])
            ref = "[" + ",".join(f"[{a},{b},{c},{d}]" for a, b, c, d in boxes) + "]"
        else:
            ref = str(int(rng.integers(0, 1000)))
        rec = {"id": f"s{i:05d}", "domain": domain, "prompt": f"task {i}", "reference": ref}
        if rng.random() < human_tier_fraction:
            rec["human_tier"] = int(rng.integers(tier_count))
        records.append(rec)
    return records


# ---------------------------------------------------------------- experiment

@dataclass
class MetricsLog:
    records: list[dict]
    samples: list[cur.TaskSample]
    learner: SyntheticLearner
    expansion: exp.ExpansionState
    curriculum: cur.CurriculumState
    tier_count: int

    def final_state(self) -> dict:
        return {
            "expansion": {
                "ema": self.expansion.ema,
                "beta": self.expansion.beta,
                "cap": self.expansion.cap,
                "last_not_valid_rate": self.expansion.last_not_valid_rate,
            },
            "tier_weights": list(self.curriculum.tier_weights),
            "mean_skill": self.learner.mean_skill(),
            "samples": [
                {
                    "id": s.id,
                    "domain": s.domain,
                    "offline_tier": s.offline_tier,
                    "tier": s.tier,
                    "blended_pass_rate": s.blended_pass_rate,
                    "exposures": s.exposures,
                    "skill": self.learner.skill[s.id],
                }
                for s in self.samples
            ],
        }


def init_population(cfg: ExperimentConfig, records: Sequence[Mapping]):
    """Latent skills and offline tiers; independent of the sampling strategy."""
    rng = np.random.default_rng([cfg.seed, 0])
    lc = cfg.learner
    state = cfg.curriculum_state()
    skills, samples = {}, []
    seen = set()
    for rec in records:
        sid = str(rec["id"])
        if sid in seen:
            raise ConfigInvalid(f"duplicate sample id {sid!r}")
        seen.add(sid)
        p = float(rec["skill"]) if "skill" in rec else float(rng.beta(lc.skill_alpha, lc.skill_beta))
        offline_rate = float(rng.binomial(lc.offline_k, p)) / lc.offline_k
        samples.append(cur.sample_from_record(rec, state, pass_rate=offline_rate))
        skills[sid] = p
    learner = SyntheticLearner(
        skill=skills,
        learn_rate=lc.learn_rate,
        length_model=LengthModel(lc.length_base, lc.length_scale, lc.length_sigma),
        truncation_penalty=lc.truncation_penalty,
    )
    return samples, learner


def run_experiment(cfg: ExperimentConfig, dataset: Sequence[Mapping] | None = None,
                   iterations: int | None = None) -> MetricsLog:
    """Drive curriculum sampling, expansion, rollout, selection and training.

    Deterministic under ``cfg.seed``. Group generation is sequential on one
    random stream; scoring may fan out over ``cfg.workers`` threads and is
    joined before any state update.
    """
    cfg.validate()
    iterations = cfg.iterations if iterations is None else iterations
    if iterations < 0:
        raise ConfigInvalid("iterations must be nonnegative")
    if dataset is None:
        dataset = make_synthetic_dataset(cfg.dataset.size, cfg.dataset.domain_mix, cfg.seed,
                                         cfg.dataset.human_tier_fraction)
    if not dataset:
        raise ConfigInvalid("dataset is empty")
    samples, learner = init_population(cfg, dataset)
    state = cfg.curriculum_state()
    t = state.tier_count
    es = exp.ExpansionState(beta=cfg.expansion.beta, cap=cfg.expansion.cap)
    rng = np.random.default_rng([cfg.seed, 1])
    B, G = cfg.batch_size, cfg.group_size
    rc = cfg.reward
    boxes = {s.id: parse_boxes(s.reference) for s in samples if s.domain == "grounding"}
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    records = []
    try:
        for it in range(iterations):
            pops = cur.tier_populations(samples, t)
            state = cur.reweight(state, pops) if cfg.curriculum.enabled else cur.uniform_state(state, pops)
            n_roll = exp.plan_rollout_count(B, es) if cfg.expansion.enabled else B
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", cur.PoolExhausted)
                batch = cur.draw_batch(state, samples, n_roll, rng)

            drafts = [generate_group(learner, s, G, cfg.learner.length_cap, rng, boxes.get(s.id)) for s in batch]

            def verify(d):
                return verify_group(d, rc.success_threshold, rc.tau, boxes.get(d.sample.id))

            groups = list(pool.map(verify, drafts)) if pool else [verify(d) for d in drafts]

            sel = exp.select_informative(groups, B, G)
            if cfg.expansion.enabled:
                es = exp.observe(es, sel.not_valid_rate)

            by_id = {g.sample_id: g for g in groups}
            samples = [
                cur.grade_online(s, by_id[s.id].correct_count, G, state) if s.id in by_id else s
                for s in samples
            ]
            learner = train_step(learner, sel.selected)

            items = [
                WorkItem(f"{g.sample_id}/{k}", r.token_length)
                for g in sel.selected for k, r in enumerate(g.responses)
            ]
            n_micro, max_load = 0, 0.0
            if items:
                items = with_cost_mode(items, cfg.scheduler.cost_mode)
                assignment = balance_ranks(items, cfg.scheduler.ranks)
                max_load = assignment.max_load
                cap = max(cfg.scheduler.capacity, max(i.length for i in items))
                for r in range(cfg.scheduler.ranks):
                    mine = [i for i in items if assignment.rank_of[i.id] == r]
                    if mine:
                        n_micro = max(n_micro, pack_microsteps(mine, cap).n_bins)

            rewards = [r for g in groups for r in g.rewards]
            n_resp = sum(len(g.responses) for g in groups)
            skill = learner.skill
            records.append({
                "iteration": it,
                "mean_skill": learner.mean_skill(),
                "not_valid_rate": sel.not_valid_rate,
                "ema": es.ema,
                "valid_fill": len(sel.selected) / B,
                "reward_mean": math.fsum(rewards) / len(rewards),
                "tier_pops": cur.tier_populations(samples, t),
                "n_rolled": len(groups),
                "valid_count": sum(g.valid for g in groups),
                "truncation_rate": sum(r.truncated for g in groups for r in g.responses) / n_resp,
                "frac_skill_above_0_9": sum(1 for p in skill.values() if p > 0.9) / len(skill),
                "tier_weights": list(state.tier_weights),
                "microsteps_max_rank": n_micro,
                "max_rank_load": max_load,
            })
    finally:
        if pool:
            pool.shutdown()
    return MetricsLog(records, samples, learner, es, state, t)
