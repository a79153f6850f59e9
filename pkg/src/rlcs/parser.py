"""Structured response parsing, boxed-answer extraction, and format/style checks.

Responses look like ``<think> ... </think> <answer> ... </answer>``; the
answer tags may be dropped, in which case everything after ``</think>`` is
the answer. Verifiable answers carry exactly one span between the box
markers.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"
ANSWER_OPEN = "<answer>"
ANSWER_CLOSE = "</answer>"
BOX_BEGIN = "<|begin_of_box|>"
BOX_END = "<|end_of_box|>"

STRUCTURAL_TAGS = (THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE)


class Mode(str, Enum):
    THINKING = "thinking"
    NON_THINKING = "non_thinking"


class ParseError(ValueError):
    """Base class for malformed responses."""


class MissingThinkClose(ParseError):
    pass


class TagOrderViolation(ParseError):
    pass


class EmptyAnswer(ParseError):
    pass


class BoxError(ValueError):
    pass


class MultipleBoxes(BoxError):
    pass


class UnbalancedBoxMarkers(BoxError):
    pass


@dataclass(frozen=True)
class StructuredResponse:
    raw_text: str
    think_content: str
    answer_content: str
    boxed_span: str | None = None
    truncated: bool = False
    token_length: int = 0


@dataclass(frozen=True)
class StyleThresholds:
    mixed_script_ratio: float = 0.3
    max_repeat_fraction: float = 0.3
    min_repeat_block: int = 8


@dataclass(frozen=True)
class StyleReport:
    mixed_script_ratio: float
    max_repeat_fraction: float
    has_box_markers_in_nonverifiable: bool

    def triggered(self, thresholds: StyleThresholds) -> bool:
        return (
            self.mixed_script_ratio > thresholds.mixed_script_ratio
            or self.max_repeat_fraction > thresholds.max_repeat_fraction
        )


def surrogate_tokens(text: str) -> int:
    """Whitespace-delimited chunk count; stands in for a tokenizer."""
    return len(text.split())


def render_response(think: str, answer: str, *, answer_tags: bool = True) -> str:
    if answer_tags:
        return f"{THINK_OPEN} {think} {THINK_CLOSE} {ANSWER_OPEN} {answer} {ANSWER_CLOSE}"
    return f"{THINK_OPEN} {think} {THINK_CLOSE} {answer}"


def _tag_positions(raw: str) -> dict[str, int]:
    pos = {}
    for tag in STRUCTURAL_TAGS:
        n = raw.count(tag)
        if n > 1:
            raise TagOrderViolation(f"{tag} occurs {n} times")
        pos[tag] = raw.find(tag)
    return pos


def _split_answer(raw: str, rest_start: int, pos: dict[str, int]) -> str:
    a_open, a_close = pos[ANSWER_OPEN], pos[ANSWER_CLOSE]
    if a_open < 0 and a_close < 0:
        return raw[rest_start:].strip()
    if a_open < 0 or a_close < 0:
        raise TagOrderViolation("unpaired answer tag")
    if not (rest_start <= a_open < a_close):
        raise TagOrderViolation("answer tags out of order")
    if raw[rest_start:a_open].strip():
        raise TagOrderViolation("text between think and answer sections")
    if raw[a_close + len(ANSWER_CLOSE):].strip():
        raise TagOrderViolation("text after </answer>")
    return raw[a_open + len(ANSWER_OPEN):a_close].strip()


def parse_response(raw: str, mode: Mode | str = Mode.THINKING) -> StructuredResponse:
    """Split a raw generation into think and answer segments.

    Leading text before ``<think>`` is rejected rather than ignored. In
    non-thinking mode the think section may be absent, and if present it
    must be empty.

    Raises:
        MissingThinkClose: thinking mode and no ``</think>``.
        TagOrderViolation: repeated, unpaired, nested or reordered tags.
        EmptyAnswer: the answer segment is blank.
    """
    mode = Mode(mode)
    pos = _tag_positions(raw)
    t_open, t_close = pos[THINK_OPEN], pos[THINK_CLOSE]

    if mode is Mode.THINKING and t_close < 0:
        raise MissingThinkClose("response has no </think>")

    if t_open < 0 and t_close < 0:
        think, rest_start = "", 0
    else:
        if t_open < 0 or t_close < 0:
            raise TagOrderViolation("unpaired think tag")
        if t_close < t_open:
            raise TagOrderViolation("</think> precedes <think>")
        if raw[:t_open].strip():
            raise TagOrderViolation("text before <think>")
        think = raw[t_open + len(THINK_OPEN):t_close].strip()
        rest_start = t_close + len(THINK_CLOSE)
        for tag in (ANSWER_OPEN, ANSWER_CLOSE):
            if 0 <= pos[tag] < rest_start:
                raise TagOrderViolation(f"{tag} inside or before the think section")

    if mode is Mode.NON_THINKING and think:
        raise TagOrderViolation("think content is not allowed in non-thinking mode")

    answer = _split_answer(raw, rest_start, pos)
    if not answer:
        raise EmptyAnswer("answer segment is empty")
    try:
        boxed = extract_boxed(answer)
    except BoxError:
        boxed = None
    return StructuredResponse(
        raw_text=raw,
        think_content=think,
        answer_content=answer,
        boxed_span=boxed,
        truncated=False,
        token_length=surrogate_tokens(raw),
    )


def extract_boxed(answer: str) -> str | None:
    """Return the whitespace-trimmed text inside the single boxed span, or None.

    Raises:
        MultipleBoxes: more than one well-formed span.
        UnbalancedBoxMarkers: markers that do not form begin/end pairs.
    """
    n_begin = answer.count(BOX_BEGIN)
    n_end = answer.count(BOX_END)
    if n_begin == 0 and n_end == 0:
        return None
    if n_begin != n_end:
        raise UnbalancedBoxMarkers(f"{n_begin} begin markers, {n_end} end markers")
    # markers must alternate begin, end, begin, end, ...
    cursor = 0
    spans = []
    for _ in range(n_begin):
        b = answer.find(BOX_BEGIN, cursor)
        e = answer.find(BOX_END, cursor)
        if b < 0 or e < b:
            raise UnbalancedBoxMarkers("box markers are nested or reversed")
        inner = b + len(BOX_BEGIN)
        if BOX_BEGIN in answer[inner:e]:
            raise UnbalancedBoxMarkers("box markers are nested")
        spans.append(answer[inner:e])
        cursor = e + len(BOX_END)
    if len(spans) > 1:
        raise MultipleBoxes(f"{len(spans)} boxed spans; only one is acceptable")
    return spans[0].strip()


def has_box_markers(text: str) -> bool:
    return BOX_BEGIN in text or BOX_END in text


def format_gate(resp: StructuredResponse, verifiable: bool) -> bool:
    """True when the response passes format checking.

    Non-verifiable answers must not contain box markers; any answer that does
    carry markers must hold exactly one well-formed span; no structural tag
    may leak into either segment.
    """
    for segment in (resp.think_content, resp.answer_content):
        if any(tag in segment for tag in STRUCTURAL_TAGS):
            return False
    if not has_box_markers(resp.answer_content):
        return True
    if not verifiable:
        return False
    try:
        extract_boxed(resp.answer_content)
    except BoxError:
        return False
    return True


# ---------------------------------------------------------------- style

def _script(ch: str) -> int:
    """1 for Basic Latin letters, 2 for CJK ideographs, 0 for anything else."""
    o = ord(ch)
    if (0x41 <= o <= 0x5A) or (0x61 <= o <= 0x7A):
        return 1
    if (0x4E00 <= o <= 0x9FFF) or (0x3400 <= o <= 0x4DBF):
        return 2
    return 0


def mixed_script_ratio(text: str) -> float:
    scripts = [s for s in map(_script, text) if s]
    if len(scripts) < 2:
        return 0.0
    switches = sum(1 for x, y in zip(scripts, scripts[1:]) if x != y)
    return switches / (len(scripts) - 1)


def suffix_array(text: str) -> list[int]:
    """Prefix-doubling suffix array, O(n log^2 n)."""
    n = len(text)
    sa = list(range(n))
    rank = [ord(c) for c in text]
    k = 1
    while n > 1:
        key = [(rank[i], rank[i + k] if i + k < n else -1) for i in range(n)]
        sa.sort(key=key.__getitem__)
        new_rank = [0] * n
        for j in range(1, n):
            new_rank[sa[j]] = new_rank[sa[j - 1]] + (key[sa[j]] != key[sa[j - 1]])
        rank = new_rank
        if rank[sa[-1]] == n - 1:
            break
        k *= 2
    return sa


def lcp_array(text: str, sa: list[int]) -> list[int]:
    """Kasai: lcp[i] = common prefix length of suffixes sa[i-1] and sa[i]; lcp[0] = 0."""
    n = len(text)
    rank = [0] * n
    for i, s in enumerate(sa):
        rank[s] = i
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rank[i]
        if r > 0:
            j = sa[r - 1]
            while i + h < n and j + h < n and text[i + h] == text[j + h]:
                h += 1
            lcp[r] = h
            if h:
                h -= 1
        else:
            h = 0
    return lcp


def _max_disjoint(positions: list[int], length: int) -> int:
    count, next_free = 0, -1
    for p in sorted(positions):
        if p >= next_free:
            count += 1
            next_free = p + length
    return count


def _has_repeat(sa: list[int], lcp: list[int], length: int, times: int) -> bool:
    group = [sa[0]]
    for i in range(1, len(sa)):
        if lcp[i] >= length:
            group.append(sa[i])
            continue
        if len(group) >= times and _max_disjoint(group, length) >= times:
            return True
        group = [sa[i]]
    return len(group) >= times and _max_disjoint(group, length) >= times


def longest_repeated_block(text: str, min_length: int = 1, times: int = 3) -> int:
    """Length of the longest substring with at least ``times`` non-overlapping
    occurrences, or 0 if none reaches ``min_length``."""
    n = len(text)
    lo, hi = max(min_length, 1), n // times
    if lo > hi:
        return 0
    sa = suffix_array(text)
    lcp = lcp_array(text, sa)
    if not _has_repeat(sa, lcp, lo, times):
        return 0
    # a prefix of a qualifying block also qualifies, so the predicate is monotone
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _has_repeat(sa, lcp, mid, times):
            lo = mid
        else:
            hi = mid - 1
    return lo


def max_repeat_fraction(text: str, min_length: int = 8) -> float:
    if not text:
        return 0.0
    return longest_repeated_block(text, min_length) / len(text)


def style_check(
    resp: StructuredResponse,
    thresholds: StyleThresholds = StyleThresholds(),
    *,
    verifiable: bool = True,
) -> StyleReport:
    """Score think and answer segments separately and report the worse of each."""
    segments = [s for s in (resp.think_content, resp.answer_content) if s]
    mixed = max((mixed_script_ratio(s) for s in segments), default=0.0)
    repeat = max(
        (max_repeat_fraction(s, thresholds.min_repeat_block) for s in segments),
        default=0.0,
    )
    return StyleReport(
        mixed_script_ratio=mixed,
        max_repeat_fraction=repeat,
        has_box_markers_in_nonverifiable=(not verifiable) and has_box_markers(resp.answer_content),
    )
