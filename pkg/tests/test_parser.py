import re

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rlcs.parser import (
    BOX_BEGIN, BOX_END, EmptyAnswer, MissingThinkClose, Mode, MultipleBoxes, StructuredResponse,
    StyleThresholds, TagOrderViolation, UnbalancedBoxMarkers, extract_boxed, format_gate,
    longest_repeated_block, max_repeat_fraction, mixed_script_ratio, parse_response,
    render_response, style_check,
)


def test_template_instance():
    r = parse_response("<think>x</think><answer>y</answer>", Mode.THINKING)
    assert (r.think_content, r.answer_content) == ("x", "y")


def test_answer_tags_optional():
    r = parse_response("<think>x</think>y", Mode.THINKING)
    assert (r.think_content, r.answer_content) == ("x", "y")


@pytest.mark.parametrize("raw", [
    "<answer>y</answer><think>x</think>",
    "</think>x<think>y",
    "<think>a</think><think>b</think>c",
    "<think>x<answer>y</answer></think>",
    "pre <think>x</think>y",
    "<think>x</think><answer>y",
    "<think>x</think>z<answer>y</answer>",
    "<think>x</think><answer>y</answer>tail",
])
def test_tag_order_violations(raw):
    with pytest.raises(TagOrderViolation):
        parse_response(raw, Mode.THINKING)


def test_missing_think_close():
    with pytest.raises(MissingThinkClose):
        parse_response("<think>runaway reasoning", Mode.THINKING)


def test_empty_answer():
    with pytest.raises(EmptyAnswer):
        parse_response("<think>x</think><answer> </answer>", Mode.THINKING)


def test_non_thinking_mode():
    assert parse_response("<answer>y</answer>", "non_thinking").answer_content == "y"
    assert parse_response("<think></think>y", Mode.NON_THINKING).think_content == ""
    assert parse_response("plain", Mode.NON_THINKING).answer_content == "plain"
    with pytest.raises(TagOrderViolation):
        parse_response("<think>x</think>y", Mode.NON_THINKING)


def test_boxed_span_recorded():
    r = parse_response(f"<think>t</think>so {BOX_BEGIN} 42 {BOX_END}", Mode.THINKING)
    assert r.boxed_span == "42"
    assert f"{BOX_BEGIN} 42 {BOX_END}" in r.answer_content


def test_extract_boxed_examples():
    assert extract_boxed(f"The answer is {BOX_BEGIN}42{BOX_END}.") == "42"
    assert extract_boxed("no box here") is None
    with pytest.raises(MultipleBoxes):
        extract_boxed(f"{BOX_BEGIN}1{BOX_END} {BOX_BEGIN}2{BOX_END}")
    with pytest.raises(UnbalancedBoxMarkers):
        extract_boxed(f"{BOX_END}1{BOX_BEGIN}")
    with pytest.raises(UnbalancedBoxMarkers):
        extract_boxed(f"{BOX_BEGIN}{BOX_BEGIN}1{BOX_END}{BOX_END}")
    with pytest.raises(UnbalancedBoxMarkers):
        extract_boxed(f"{BOX_BEGIN}1")


_PIECES = st.lists(st.sampled_from(["B", "E", "x", "y "]), max_size=8)


@settings(max_examples=300)
@given(_PIECES)
def test_extract_boxed_matches_grammar(pieces):
    text = "".join({"B": BOX_BEGIN, "E": BOX_END}.get(p, p) for p in pieces)
    markers = "".join(p for p in pieces if p in "BE")
    if not markers:
        assert extract_boxed(text) is None
    elif re.fullmatch(r"B E", " ".join(markers)):
        inner = "".join(pieces[pieces.index("B") + 1:pieces.index("E")])
        assert extract_boxed(text) == inner.strip()
    elif re.fullmatch(r"(BE){2,}", markers):
        with pytest.raises(MultipleBoxes):
            extract_boxed(text)
    else:
        with pytest.raises(UnbalancedBoxMarkers):
            extract_boxed(text)


_FIELD = st.text(alphabet="abc xyz,.123汉字", min_size=1, max_size=30).map(str.strip).filter(bool)


@settings(max_examples=200)
@given(_FIELD, _FIELD, st.one_of(st.none(), _FIELD), st.booleans())
def test_render_parse_round_trip(think, answer, box, answer_tags):
    if box is not None:
        answer = f"{answer} {BOX_BEGIN}{box}{BOX_END}"
    r = parse_response(render_response(think, answer, answer_tags=answer_tags), Mode.THINKING)
    assert r.think_content == think
    assert r.answer_content == answer
    assert r.boxed_span == box


def _resp(answer, think=""):
    return StructuredResponse(raw_text="", think_content=think, answer_content=answer)


def test_format_gate_examples():
    boxed = _resp(f"{BOX_BEGIN}4{BOX_END}")
    assert format_gate(boxed, verifiable=False) is False
    assert format_gate(boxed, verifiable=True) is True
    assert format_gate(_resp("four"), verifiable=False) is True
    assert format_gate(_resp(f"{BOX_BEGIN}4"), verifiable=True) is False
    assert format_gate(_resp("ok", think="<answer>"), verifiable=True) is False


def test_mixed_script_examples():
    assert mixed_script_ratio("plain english text only") == 0.0
    assert mixed_script_ratio("汉a汉a汉a汉a汉a") == 1.0
    assert mixed_script_ratio("汉字 and 12, 34") == pytest.approx(1 / 4)
    assert mixed_script_ratio("") == 0.0


def brute_repeat(text, times=3):
    best = 0
    for length in range(1, len(text) // times + 1):
        for i in range(len(text) - length + 1):
            block = text[i:i + length]
            count, j = 0, 0
            while (k := text.find(block, j)) >= 0:
                count, j = count + 1, k + length
            if count >= times:
                best = length
                break
    return best


def test_repeat_examples():
    assert max_repeat_fraction("abcabcabc", min_length=1) == pytest.approx(3 / 9)
    assert max_repeat_fraction("abcabcabc") == 0.0
    assert longest_repeated_block("aaaa") == 1
    assert longest_repeated_block("") == 0


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="ab", max_size=24))
def test_repeat_matches_brute_force(text):
    assert longest_repeated_block(text) == brute_repeat(text)


def test_style_check_pure_and_triggers():
    t = StyleThresholds()
    resp = _resp("7", think="汉a" * 10)
    a, b = style_check(resp, t), style_check(resp, t)
    assert a == b and a.triggered(t)
    assert not style_check(_resp("a normal answer"), t).triggered(t)
    looped = _resp("7", think="reasoning step " * 3)
    assert style_check(looped, t).max_repeat_fraction == pytest.approx(15 / 45)
    assert style_check(looped, t).triggered(t)


@given(st.text(max_size=40))
def test_style_bounds(text):
    assume(text)
    assert 0.0 <= mixed_script_ratio(text) <= 1.0
    assert 0.0 <= max_repeat_fraction(text, 1) <= 1 / 3 + 1e-12
