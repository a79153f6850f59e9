import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlcs.judge import JudgeTimeout, StubJudge
from rlcs.parser import BOX_BEGIN, BOX_END
from rlcs.rewards import (
    ActionRecord, Box, Domain, MalformedBox, RewardConfig, RewardRequest, Source, UnknownDomain,
    grounding_hits, has_unit, iou, numeric_equivalent, parse_boxes, parse_number, score,
    verify_chart, verify_generic, verify_grounding, verify_gui_agent, verify_math, verify_ocr,
)


def req(domain, ref, cand, **kw):
    return RewardRequest(domain, "q", ref, cand, **kw)


class TestNumbers:
    @pytest.mark.parametrize("c,r,ok", [("43", "43.0", True), ("1/2", "0.5", True), ("43", "44", False),
                                        ("50%", "0.5", True), ("1e3", "1000", True), ("-3/4", "-0.75", True)])
    def test_numeric_equivalent(self, c, r, ok):
        assert numeric_equivalent(c, r, 1e-4) is ok

    def test_parse_number_exact(self):
        assert parse_number("0.1") == Fraction(1, 10)
        assert parse_number("2.5e-3") == Fraction(1, 400)
        assert parse_number("x=2") is None
        assert parse_number("1/0") is None

    def test_rtol_must_be_positive(self):
        with pytest.raises(ValueError):
            numeric_equivalent("1", "1", 0)

    @pytest.mark.parametrize("text,unit", [("3 m/s", True), ("3.0m", True), ("6.02e23", False),
                                           ("1E-5", False), ("42", False), ("x=2", False), ("2x", True), ("mol 2", False)])
    def test_has_unit(self, text, unit):
        assert has_unit(text) is unit


class TestMath:
    def test_examples(self):
        assert verify_math(req("math", "0.5", "0.5000")).score == 1
        r = verify_math(req("physics", "3.0 m/s", "3 m/s"), StubJudge({("3.0 m/s", "3 m/s"): True}))
        assert (r.score, r.source) == (1, Source.JUDGE)
        assert verify_math(req("math", "x=3", "x=2"), StubJudge()).score == 0

    def test_unit_answers_never_rule_matched(self):
        r = verify_math(req("chemistry", "2 mol", "2 mol"), StubJudge())
        assert (r.score, r.source) == (0, Source.JUDGE)

    def test_judge_failure_falls_back(self):
        class Broken:
            def judge(self, *a):
                raise JudgeTimeout("slow")
        r = verify_math(req("physics", "3 m/s", "3 m/s"), Broken())
        assert (r.score, r.source) == (1, Source.FALLBACK)

    def test_no_judge_falls_back(self):
        assert verify_math(req("math", "a+b", "c+d")).source == Source.FALLBACK


class TestChart:
    def test_examples(self):
        assert verify_chart(req("chart", "2020", "2019")).score == 0
        assert verify_chart(req("chart", "41.80", "41.8")).score == 1
        loose = RewardConfig(rtol={"chart": 1e-2})
        assert verify_chart(req("chart", "12.4", "12.3"), config=loose).score == 1
        assert verify_chart(req("chart", "12.4", "12.3")).score == 0

    def test_year_exact_even_with_loose_rtol(self):
        loose = RewardConfig(rtol={"chart": 0.5})
        assert verify_chart(req("chart", "2020", "2019"), config=loose).score == 0
        assert verify_chart(req("chart", "2020", "2020.0"), config=loose).score == 1
        assert verify_chart(req("chart", "3020", "3019"), config=loose).score == 1


def dp_distance(a, b):
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class TestOcr:
    @pytest.mark.parametrize("c,r,s", [("hello", "hello", 1.0), ("helo", "hello", 0.8), ("", "abc", 0.0), ("", "", 1.0)])
    def test_examples(self, c, r, s):
        assert verify_ocr(c, r).score == pytest.approx(s, abs=1e-12)

    @settings(max_examples=200)
    @given(st.text(max_size=20), st.text(max_size=20), st.text(max_size=20))
    def test_symmetry_identity_triangle(self, a, b, c):
        assert verify_ocr(a, b).score == verify_ocr(b, a).score
        assert verify_ocr(a, a).score == 1.0
        d = lambda x, y: round((1 - verify_ocr(x, y).score) * max(len(x), len(y), 1))  # noqa: E731
        assert d(a, b) == dp_distance(a, b)
        assert d(a, c) <= d(a, b) + d(b, c)

    def test_contrast_with_math(self):
        assert numeric_equivalent("43", "43.0", 1e-4)
        assert verify_ocr("43", "43.0").score < 1


def rational_iou(a, b):
    a, b = [Fraction(v) for v in a], [Fraction(v) for v in b]
    w = max(Fraction(0), min(a[2], b[2]) - max(a[0], b[0]))
    h = max(Fraction(0), min(a[3], b[3]) - max(a[1], b[1]))
    inter = w * h
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


boxes = st.tuples(st.integers(0, 999), st.integers(0, 999), st.integers(1, 200), st.integers(1, 200)).map(
    lambda t: Box(t[0], t[1], min(t[0] + t[2], 1000), min(t[1] + t[3], 1000)))


class TestIou:
    def test_examples(self):
        a = Box(0, 0, 2, 2)
        assert iou(a, a) == 1.0
        assert iou(a, Box(5, 5, 6, 6)) == 0.0
        assert iou(a, Box(1, 0, 3, 2)) == pytest.approx(1 / 3, abs=1e-15)
        assert iou(a, Box(2, 0, 4, 2)) == 0.0

    @settings(max_examples=300)
    @given(boxes, boxes)
    def test_symmetric_bounded_exact(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0
        assert v == float(rational_iou(a.as_tuple(), b.as_tuple()))

    @pytest.mark.parametrize("coords", [(0, 0, 0, 5), (5, 0, 1, 5), (0, 0, 1001, 5), (-1, 0, 3, 3), (0, 0, float("nan"), 1)])
    def test_malformed(self, coords):
        with pytest.raises(MalformedBox):
            Box(*coords)


def brute_hits(pred, gt, tau):
    best = 0
    slots = list(range(len(pred))) + [None] * len(gt)
    for perm in set(itertools.permutations(slots, len(gt))):
        best = max(best, sum(p is not None and iou(pred[p], gt[i]) > tau for i, p in enumerate(perm)))
    return best


class TestGrounding:
    two = [Box(10, 10, 50, 50), Box(100, 100, 200, 200)]

    def test_examples(self):
        assert verify_grounding(self.two, self.two).score == 1.0
        assert verify_grounding([self.two[0], Box(300, 300, 400, 400)], self.two, 0.5).score == 0.5
        assert verify_grounding([], self.two).score == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            verify_grounding(self.two, [])
        with pytest.raises(ValueError):
            verify_grounding(self.two, self.two, tau=1.0)

    def test_one_to_one(self):
        gt = [Box(0, 0, 10, 10), Box(0, 0, 10, 11)]
        assert verify_grounding([Box(0, 0, 10, 10)], gt).score == 0.5

    @settings(max_examples=150, deadline=None)
    @given(st.lists(boxes, max_size=4), st.lists(boxes, min_size=1, max_size=4), st.randoms(use_true_random=False))
    def test_permutation_invariant_and_monotone(self, pred, gt, rnd):
        s = verify_grounding(pred, gt).score
        p2, g2 = pred[:], gt[:]
        rnd.shuffle(p2)
        rnd.shuffle(g2)
        assert verify_grounding(p2, g2).score == s
        assert verify_grounding(pred + [gt[0]], gt).score >= s
        assert grounding_hits(pred, gt, 0.5) <= brute_hits(pred, gt, 0.5)
        assert grounding_hits(pred, gt, 0.5, "optimal") == brute_hits(pred, gt, 0.5)

    def test_parse_boxes(self):
        assert parse_boxes("[[1, 2, 3, 4], [5,6,7,8]]") == [Box(1, 2, 3, 4), Box(5, 6, 7, 8)]
        assert parse_boxes("nothing") == []
        with pytest.raises(MalformedBox):
            parse_boxes("[3,3,1,1]")


def act(t, box=None, text=None, subtask="action"):
    return ActionRecord(t, Box(*box) if box else None, text, subtask)


class TestGui:
    def test_examples(self):
        b = (10, 10, 60, 40)
        assert verify_gui_agent(act("click", b), act("click", b)).score == 1
        assert verify_gui_agent(act("scroll", b), act("click", b)).score == 0
        r = verify_gui_agent(act("click", (30, 0, 100, 10)), act("click", (0, 0, 70, 10)), 0.5)
        assert iou(Box(30, 0, 100, 10), Box(0, 0, 70, 10)) == pytest.approx(0.4)
        assert r.score == 0 and r.binary is False

    def test_subtasks(self):
        gt = act("answer", text="Settings", subtask="qa")
        assert verify_gui_agent(act("answer", text="settings"), gt).score == 1
        assert verify_gui_agent(act("answer", text="Prefs"), gt, judge=StubJudge({("Settings", "Prefs"): True})).score == 1
        g = act("select", (0, 0, 10, 10), subtask="grounding")
        assert verify_gui_agent(act("tap", (1, 0, 11, 10)), g).score == 1
        assert verify_gui_agent(act("type", text="a"), act("type", text="b")).score == 0

    def test_from_json(self):
        a = ActionRecord.from_json(json.dumps({"action_type": "click", "box": [0, 0, 5, 5]}))
        assert a.box == Box(0, 0, 5, 5) and a.subtask == "action"
        with pytest.raises(ValueError):
            ActionRecord.from_json("click")


class TestGeneric:
    def test_examples(self):
        assert verify_generic(req("vqa", "4", "4")).score == 1
        r = verify_generic(req("long_document", "a", "b"), StubJudge({("a", "b"): True}))
        assert (r.score, r.source) == (1, Source.JUDGE)
        assert verify_generic(req("spatial", "right", "left"), StubJudge()).score == 0


class TestScore:
    def test_examples(self):
        boxed = f"<think>w</think><answer>it is {BOX_BEGIN}42{BOX_END}</answer>"
        assert score(req("math", "42", boxed)).score == 1
        assert score(req("long_document", "s", f"{BOX_BEGIN}s{BOX_END}", verifiable=False),
                     StubJudge({("s", "s"): True})).score == 0
        assert score(req("ocr", "hello", "helo")).score == verify_ocr("helo", "hello").score

    def test_unknown_domain(self):
        with pytest.raises(UnknownDomain):
            score(req("astrology", "a", "a"))

    def test_malformed_inputs_score_zero(self):
        assert score(req("grounding", "[[0,0,5,5]]", "[[5,5,1,1]]")).score == 0
        assert score(req("gui_agent", json.dumps({"action_type": "click"}), "nope")).score == 0
        assert score(req("math", "1", "<think>x")).score == 0

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(list(Domain)), st.text(max_size=30), st.text(max_size=30))
    def test_bounds_and_determinism(self, domain, ref, cand):
        r = RewardRequest(domain, "q", ref, cand)
        try:
            a = score(r, StubJudge())
        except (MalformedBox, ValueError):
            return  # unparseable references are a caller error
        assert 0.0 <= a.score <= 1.0
        assert a == score(r, StubJudge())
