"""Domain-specific verifiers and the reward dispatcher.

Every verifier returns a ``RewardResult`` with a score in [0, 1]. Rule-based
checks run first; a ``JudgeClient`` handles what rules cannot decide, and any
judge failure degrades to exact matching with ``source=fallback``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

from rlcs import kernels
from rlcs.judge import JudgeClient, JudgeError, normalize_answer
from rlcs.parser import (
    STRUCTURAL_TAGS,
    THINK_CLOSE,
    BoxError,
    Mode,
    ParseError,
    StructuredResponse,
    StyleThresholds,
    extract_boxed,
    format_gate,
    parse_response,
    style_check,
)


class Domain(str, Enum):
    MATH = "math"
    PHYSICS = "physics"
    CHEMISTRY = "chemistry"
    LONG_DOCUMENT = "long_document"
    CHART = "chart"
    OCR = "ocr"
    VQA = "vqa"
    GEOGUESS = "geoguess"
    GROUNDING = "grounding"
    SPATIAL = "spatial"
    GUI_AGENT = "gui_agent"
    VIDEO = "video"


class Source(str, Enum):
    RULE = "rule"
    JUDGE = "judge"
    FALLBACK = "fallback"


class UnknownDomain(ValueError):
    pass


class MalformedBox(ValueError):
    pass


# Whether each domain's reward is 0/1 or continuous.
BINARY = {
    Domain.MATH: True,
    Domain.PHYSICS: True,
    Domain.CHEMISTRY: True,
    Domain.LONG_DOCUMENT: True,
    Domain.CHART: True,
    Domain.OCR: False,
    Domain.VQA: True,
    Domain.GEOGUESS: False,
    Domain.GROUNDING: False,
    Domain.SPATIAL: True,
    Domain.GUI_AGENT: False,
    Domain.VIDEO: True,
}

DEFAULT_RTOL = {
    "math": 1e-4,
    "physics": 1e-4,
    "chemistry": 1e-4,
    "chart": 5e-3,
    "vqa": 1e-9,
    "spatial": 1e-9,
    "video": 1e-9,
}


@dataclass(frozen=True)
class RewardRequest:
    domain: str
    question: str
    reference: str
    candidate: str
    verifiable: bool = True


@dataclass(frozen=True)
class RewardResult:
    score: float
    binary: bool
    source: Source
    diagnostic: str = ""

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.binary and self.score not in (0.0, 1.0):
            raise ValueError(f"binary result with score {self.score}")


@dataclass
class RewardConfig:
    rtol: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_RTOL))
    tau: float = 0.5
    style: StyleThresholds = field(default_factory=StyleThresholds)
    grounding_matching: str = "greedy"

    def rtol_for(self, domain: str) -> float:
        return self.rtol.get(domain, DEFAULT_RTOL.get(domain, 1e-4))


# ---------------------------------------------------------------- numbers

_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_FRACTION = re.compile(r"([+-]?\d+)\s*/\s*([+-]?\d+)")
_YEAR = re.compile(r"\d{4}")


def parse_number(text: str) -> Fraction | None:
    """Exact value of a numeric literal, or None.

    Accepts signed integers and decimals, scientific notation, simple
    fractions ``a/b`` and a trailing ``%`` (scaled by 1/100).
    """
    s = text.strip()
    scale = Fraction(1)
    if s.endswith("%"):
        s, scale = s[:-1].rstrip(), Fraction(1, 100)
    if _DECIMAL.fullmatch(s):
        return Fraction(s) * scale
    m = _FRACTION.fullmatch(s)
    if m:
        den = int(m.group(2))
        if den == 0:
            return None
        return Fraction(int(m.group(1)), den) * scale
    return None


def numeric_equivalent(candidate: str, reference: str, rtol: float) -> bool:
    if rtol <= 0:
        raise ValueError("rtol must be positive")
    a, b = parse_number(candidate), parse_number(reference)
    if a is None or b is None:
        return False
    return abs(a - b) <= Fraction(rtol) * max(abs(b), Fraction(1e-12))


_UNIT_AFTER = re.compile(r"\d\s*([^\W\d_]+|[°µΩ])")
_UNIT_BEFORE = re.compile(r"[^\W\d_]\d")
_EXPONENT = re.compile(r"\d[eE][+-]?\d")


def has_unit(text: str) -> bool:
    """A letter run touching a number, other than an exponent marker."""
    for m in _UNIT_AFTER.finditer(text):
        word = m.group(1)
        if word in ("e", "E") and _EXPONENT.match(text, m.start()):
            continue
        return True
    for m in _UNIT_BEFORE.finditer(text):
        if text[m.start()] in "eE" and m.start() > 0 and _EXPONENT.match(text, m.start() - 1):
            continue
        return True
    return False


def _exact(candidate: str, reference: str) -> bool:
    return normalize_answer(candidate) == normalize_answer(reference)


def _binary(ok: bool, source: Source, diagnostic: str, binary: bool = True) -> RewardResult:
    return RewardResult(1.0 if ok else 0.0, binary, source, diagnostic)


def _ask_judge(req: RewardRequest, judge: JudgeClient | None, binary: bool, why: str) -> RewardResult:
    if judge is None:
        return _binary(_exact(req.candidate, req.reference), Source.FALLBACK,
                       f"{why}; no judge configured, exact match only", binary)
    try:
        verdict = judge.judge(req.question, req.reference, req.candidate, req.domain)
    except JudgeError as exc:
        return _binary(_exact(req.candidate, req.reference), Source.FALLBACK,
                       f"{why}; judge failed ({type(exc).__name__}: {exc}), exact match only", binary)
    return _binary(verdict.equivalent, Source.JUDGE, f"{why}; judge confidence {verdict.confidence:g}", binary)


def _numeric_exact_judge(req, judge, rtol, binary=True) -> RewardResult:
    if parse_number(req.candidate) is not None and parse_number(req.reference) is not None:
        ok = numeric_equivalent(req.candidate, req.reference, rtol)
        return _binary(ok, Source.RULE, f"numeric match at rtol={rtol:g}", binary)
    if _exact(req.candidate, req.reference):
        return _binary(True, Source.RULE, "exact match", binary)
    return _ask_judge(req, judge, binary, "no rule match")


# ---------------------------------------------------------------- verifiers

def verify_math(req: RewardRequest, judge: JudgeClient | None = None,
                config: RewardConfig | None = None) -> RewardResult:
    """Math, physics and chemistry. Physics and chemistry answers carrying
    units go straight to the judge."""
    config = config or RewardConfig()
    if req.domain in ("physics", "chemistry") and (has_unit(req.reference) or has_unit(req.candidate)):
        return _ask_judge(req, judge, True, "units present")
    return _numeric_exact_judge(req, judge, config.rtol_for(req.domain))


def verify_chart(req: RewardRequest, judge: JudgeClient | None = None,
                 config: RewardConfig | None = None) -> RewardResult:
    config = config or RewardConfig()
    ref = req.reference.strip()
    if _YEAR.fullmatch(ref) and 1000 <= int(ref) <= 2100:
        cand = parse_number(req.candidate)
        if cand is not None:
            return _binary(cand == int(ref), Source.RULE, "year: exact integer match")
    return _numeric_exact_judge(req, judge, config.rtol_for("chart"))


def verify_ocr(candidate: str, reference: str) -> RewardResult:
    longest = max(len(candidate), len(reference))
    if longest == 0:
        return RewardResult(1.0, False, Source.RULE, "both empty")
    d = kernels.levenshtein(candidate, reference)
    return RewardResult(1.0 - d / longest, False, Source.RULE, f"edit distance {d}")


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(isinstance(c, (int, float)) and math.isfinite(c) for c in coords):
            raise MalformedBox(f"non-finite coordinates {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise MalformedBox(f"degenerate box {coords}")
        if min(coords) < 0 or max(coords) > 1000:
            raise MalformedBox(f"box {coords} outside [0, 1000]")

    @classmethod
    def of(cls, seq: Sequence[float]) -> "Box":
        if len(seq) != 4:
            raise MalformedBox(f"expected 4 coordinates, got {len(seq)}")
        return cls(*seq)

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def iou(a: Box, b: Box) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    inter = w * h
    return inter / (a.area + b.area - inter)


def _max_matching(edges: list[list[int]], n_right: int) -> int:
    match_right = [-1] * n_right

    def augment(u, seen):
        for v in edges[u]:
            if not seen[v]:
                seen[v] = True
                if match_right[v] < 0 or augment(match_right[v], seen):
                    match_right[v] = u
                    return True
        return False

    return sum(augment(u, [False] * n_right) for u in range(len(edges)))


def grounding_hits(pred: Sequence[Box], gt: Sequence[Box], tau: float, matching: str = "greedy") -> int:
    """Number of ground-truth boxes matched one-to-one with IoU > tau."""
    if matching == "optimal":
        edges = [[j for j, p in enumerate(pred) if iou(p, g) > tau] for g in gt]
        return _max_matching(edges, len(pred))
    if matching != "greedy":
        raise ValueError(f"unknown matching {matching!r}")
    pairs = []
    for i, g in enumerate(gt):
        for j, p in enumerate(pred):
            v = iou(g, p)
            if v > tau:
                # coordinate tie-break keeps the result independent of list order
                pairs.append((-v, g.as_tuple(), p.as_tuple(), i, j))
    pairs.sort()
    used_g, used_p = set(), set()
    for _, _, _, i, j in pairs:
        if i not in used_g and j not in used_p:
            used_g.add(i)
            used_p.add(j)
    return len(used_g)


def verify_grounding(pred: Sequence[Box], gt: Sequence[Box], tau: float = 0.5,
                     matching: str = "greedy") -> RewardResult:
    if not gt:
        raise ValueError("ground truth must contain at least one box")
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    hits = grounding_hits(pred, gt, tau, matching)
    return RewardResult(hits / len(gt), False, Source.RULE, f"{hits}/{len(gt)} boxes with IoU > {tau:g}")


_QUAD = re.compile(r"\[\s*([^\[\],]+),([^\[\],]+),([^\[\],]+),([^\[\],]+)\]")


def parse_boxes(text: str) -> list[Box]:
    """Every ``[x1,y1,x2,y2]`` quadruple in the text, in order."""
    boxes = []
    for m in _QUAD.finditer(text):
        try:
            coords = [float(g) for g in m.groups()]
        except ValueError:
            raise MalformedBox(f"non-numeric box {m.group(0)!r}") from None
        boxes.append(Box.of(coords))
    return boxes


@dataclass(frozen=True)
class ActionRecord:
    action_type: str
    box: Box | None = None
    text: str | None = None
    subtask: str = "action"

    @classmethod
    def from_json(cls, text: str) -> "ActionRecord":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"action record is not JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ValueError("action record must be a JSON object")
        box = obj.get("box")
        return cls(
            action_type=str(obj.get("action_type", "")),
            box=Box.of(box) if box is not None else None,
            text=obj.get("text"),
            subtask=obj.get("subtask", "action"),
        )


def verify_gui_agent(pred: ActionRecord, gt: ActionRecord, tau: float = 0.5,
                     judge: JudgeClient | None = None, question: str = "") -> RewardResult:
    """GUI agent subtasks, chosen by the ground-truth record.

    action: type must match, boxes must overlap at IoU >= tau when given,
    text payloads must match when given. grounding: IoU only. qa: exact
    text, then the judge.
    """
    if gt.subtask == "grounding":
        ok = pred.box is not None and gt.box is not None and iou(pred.box, gt.box) >= tau
        return _binary(ok, Source.RULE, "grounding IoU", binary=False)
    if gt.subtask == "qa":
        req = RewardRequest("gui_agent", question, gt.text or "", pred.text or "")
        if _exact(req.candidate, req.reference):
            return _binary(True, Source.RULE, "exact match", binary=False)
        return _ask_judge(req, judge, False, "no exact match")
    if gt.subtask != "action":
        raise ValueError(f"unknown GUI subtask {gt.subtask!r}")
    if pred.action_type.strip() != gt.action_type.strip():
        return _binary(False, Source.RULE, "action type mismatch", binary=False)
    if (pred.box is None) != (gt.box is None):
        return _binary(False, Source.RULE, "target box missing on one side", binary=False)
    if gt.box is not None and iou(pred.box, gt.box) < tau:
        return _binary(False, Source.RULE, "target IoU below tau", binary=False)
    if (pred.text is not None or gt.text is not None) and (pred.text or "").strip() != (gt.text or "").strip():
        return _binary(False, Source.RULE, "text payload mismatch", binary=False)
    return _binary(True, Source.RULE, "action matches", binary=False)


def verify_generic(req: RewardRequest, judge: JudgeClient | None = None,
                   config: RewardConfig | None = None) -> RewardResult:
    config = config or RewardConfig()
    domain = Domain(req.domain)
    binary = BINARY[domain]
    if domain in (Domain.LONG_DOCUMENT, Domain.GEOGUESS):
        return _ask_judge(req, judge, binary, "semantic matching")
    if domain not in (Domain.VQA, Domain.SPATIAL, Domain.VIDEO):
        raise ValueError(f"verify_generic does not handle {req.domain}")
    return _numeric_exact_judge(req, judge, config.rtol_for(req.domain), binary)


# ---------------------------------------------------------------- dispatcher

def as_structured(text: str) -> StructuredResponse:
    """Parse a candidate that carries structural tags; bare text is an answer."""
    if any(tag in text for tag in STRUCTURAL_TAGS):
        mode = Mode.THINKING if THINK_CLOSE in text else Mode.NON_THINKING
        return parse_response(text, mode)
    return StructuredResponse(raw_text=text, think_content="", answer_content=text.strip())


def _zero(domain: Domain, why: str) -> RewardResult:
    return RewardResult(0.0, BINARY[domain], Source.RULE, why)


def score(req: RewardRequest, judge: JudgeClient | None = None,
          config: RewardConfig | None = None) -> RewardResult:
    """Format gate, style gate, then the domain verifier.

    ``req.candidate`` may be a full response (tags and box markers) or an
    already extracted answer. A failed gate scores 0 before any domain logic
    runs.
    """
    config = config or RewardConfig()
    try:
        domain = Domain(req.domain)
    except ValueError:
        raise UnknownDomain(f"unknown domain {req.domain!r}") from None

    try:
        resp = as_structured(req.candidate)
    except ParseError as exc:
        return _zero(domain, f"format: {type(exc).__name__}: {exc}")
    if not format_gate(resp, req.verifiable):
        return _zero(domain, "format: box markers misused")
    report = style_check(resp, config.style, verifiable=req.verifiable)
    if report.triggered(config.style):
        return _zero(domain, f"style: mixed={report.mixed_script_ratio:.3f} "
                             f"repeat={report.max_repeat_fraction:.3f}")

    try:
        boxed = extract_boxed(resp.answer_content)
    except BoxError as exc:  # unreachable after format_gate; kept for safety
        return _zero(domain, f"format: {exc}")
    answer = boxed if boxed is not None else resp.answer_content
    sub = RewardRequest(req.domain, req.question, req.reference, answer, req.verifiable)

    if domain in (Domain.MATH, Domain.PHYSICS, Domain.CHEMISTRY):
        return verify_math(sub, judge, config)
    if domain is Domain.CHART:
        return verify_chart(sub, judge, config)
    if domain is Domain.OCR:
        return verify_ocr(answer, req.reference)
    if domain is Domain.GROUNDING:
        gt = parse_boxes(req.reference)
        try:
            pred = parse_boxes(answer)
        except MalformedBox as exc:
            return _zero(domain, f"malformed predicted box: {exc}")
        return verify_grounding(pred, gt, config.tau, config.grounding_matching)
    if domain is Domain.GUI_AGENT:
        gt_action = ActionRecord.from_json(req.reference)
        try:
            pred_action = ActionRecord.from_json(answer)
        except (ValueError, MalformedBox) as exc:
            return _zero(domain, f"unparseable action: {exc}")
        return verify_gui_agent(pred_action, gt_action, config.tau, judge, req.question)
    return verify_generic(sub, judge, config)
