"""Regenerate data/reward_fixtures.jsonl.

Expected scores come from small oracles written here from the reward rules
(full-matrix edit distance, rational box areas, exhaustive box matching,
Fraction comparisons). The package itself is not imported.

    python3 scripts/make_fixtures.py [--out data/reward_fixtures.jsonl] [--seed 7]
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
from fractions import Fraction
from pathlib import Path

BOX_OPEN, BOX_CLOSE = "<|begin_of_box|>", "<|end_of_box|>"

cases: list[dict] = []


def add(domain, reference, candidate, expect, tol=0.0, question="", **extra):
    cases.append({"domain": domain, "question": question, "reference": reference,
                  "candidate": candidate, "expect_score": expect, "tol": tol, **extra})


# ---------------------------------------------------------------- oracles

def edit_distance(a: str, b: str) -> int:
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def ocr_oracle(cand: str, ref: str) -> float:
    n = max(len(cand), len(ref))
    return 1.0 if n == 0 else float(1 - Fraction(edit_distance(cand, ref), n))


def iou_q(a, b) -> Fraction:
    a, b = [Fraction(v) for v in a], [Fraction(v) for v in b]
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0 or h <= 0:
        return Fraction(0)
    inter = w * h
    area = lambda r: (r[2] - r[0]) * (r[3] - r[1])  # noqa: E731
    return inter / (area(a) + area(b) - inter)


def best_matching(pred, gt, tau) -> int:
    """Exhaustive maximum one-to-one matching with IoU > tau."""
    tau = Fraction(tau)
    best = 0
    k = min(len(pred), len(gt))
    for perm in itertools.permutations(range(len(pred)), k):
        best = max(best, sum(iou_q(pred[p], gt[i]) > tau for i, p in enumerate(perm)))
    return best


def within(c: Fraction, r: Fraction, rtol) -> bool:
    return abs(c - r) <= Fraction(rtol) * max(abs(r), Fraction(1, 10**12))


def boxes_text(boxes) -> str:
    return "[" + ",".join("[" + ",".join(str(v) for v in b) + "]" for b in boxes) + "]"


def action(action_type, box=None, text=None, subtask=None) -> str:
    obj = {"action_type": action_type}
    if box is not None:
        obj["box"] = box
    if text is not None:
        obj["text"] = text
    if subtask is not None:
        obj["subtask"] = subtask
    return json.dumps(obj)


def boxed(x: str) -> str:
    return f"{BOX_OPEN}{x}{BOX_CLOSE}"


# ---------------------------------------------------------------- hand examples

def hand_examples():
    add("math", "43.0", "43", 1.0, note="43 vs 43.0 is a match for math")
    add("ocr", "43", "43.0", ocr_oracle("43.0", "43"), 1e-12, note="but not for OCR")
    add("math", "0.5", "1/2", 1.0)
    add("math", "44", "43", 0.0)
    add("math", "0.5", "0.5000", 1.0)
    add("physics", "3.0 m/s", "3 m/s", 1.0, judge_equivalent=True)
    add("math", "x=3", "x=2", 0.0)
    add("ocr", "hello", "hello", 1.0, 1e-12)
    add("ocr", "hello", "helo", 0.8, 1e-12)
    add("ocr", "abc", "", 0.0, 1e-12)
    add("chart", "2020", "2019", 0.0)
    add("chart", "41.80", "41.8", 1.0)
    add("chart", "12.4", "12.3", 1.0, rtol=1e-2)
    add("grounding", boxes_text([[0, 0, 2, 2]]), boxes_text([[0, 0, 2, 2]]), 1.0, 1e-12)
    add("grounding", boxes_text([[0, 0, 2, 2]]), boxes_text([[1, 0, 3, 2]]), 0.0, 1e-12,
        note="IoU 1/3 is below tau")
    add("grounding", boxes_text([[0, 0, 2, 2]]), boxes_text([[1, 0, 3, 2]]), 1.0, 1e-12, tau=0.3)
    two = [[10, 10, 50, 50], [100, 100, 200, 200]]
    add("grounding", boxes_text(two), boxes_text(two), 1.0, 1e-12)
    add("grounding", boxes_text(two), boxes_text([[10, 10, 50, 50], [300, 300, 400, 400]]), 0.5, 1e-12)
    add("grounding", boxes_text(two), "[]", 0.0, 1e-12)
    add("gui_agent", action("click", [10, 10, 60, 40]), action("click", [10, 10, 60, 40]), 1.0)
    add("gui_agent", action("click", [10, 10, 60, 40]), action("scroll", [10, 10, 60, 40]), 0.0)
    # areas 100 and 100, overlap 4x10 -> IoU 40 / 160 = 0.25; 0.4 needs overlap 400/7
    add("gui_agent", action("click", [0, 0, 10, 10]), action("click", [6, 0, 16, 10]), 0.0)
    add("gui_agent", action("click", [0, 0, 70, 10]), action("click", [30, 0, 100, 10]), 0.0,
        note="IoU 0.4 against tau 0.5")
    add("vqa", "4", "4", 1.0)
    add("long_document", "The committee postponed the vote until spring.",
        "The vote was delayed by the committee to the spring.", 1.0, judge_equivalent=True)
    add("spatial", "right", "left", 0.0)
    add("math", "42", f"<think>work</think><answer>The answer is {boxed('42')}.</answer>", 1.0)
    add("long_document", "summary", f"The summary is {boxed('summary')}", 0.0, verifiable=False,
        judge_equivalent=True)
    add("ocr", "hello world", "<think>read it</think>hello wrld",
        ocr_oracle("hello wrld", "hello world"), 1e-12)


# ---------------------------------------------------------------- generated

def gen_math(rng: random.Random):
    for domain in ("math", "physics", "chemistry"):
        for _ in range(12):
            num, den = rng.randint(-999, 999), rng.choice([1, 2, 4, 5, 8, 10, 20, 25])
            v = Fraction(num, den)
            dec = f"{float(v):.6f}".rstrip("0").rstrip(".")
            forms = [dec, f"{num}/{den}", f"{float(v):e}"]
            ref, cand = rng.sample(forms, 2)
            add(domain, ref, cand, 1.0)
        for _ in range(8):
            r = Fraction(rng.randint(100, 99999), 100)
            rel = rng.choice([Fraction(1, 10**6), Fraction(1, 10**5), Fraction(1, 10**3), Fraction(1, 50)])
            c = r * (1 + rel)
            cand = f"{float(c):.10g}"
            expect = 1.0 if within(Fraction(cand), r, 1e-4) else 0.0
            add(domain, str(float(r)), cand, expect)
    add("math", "50%", "0.5", 1.0)
    add("math", "1.5e3", "1500", 1.0)
    add("math", "\\frac{1}{2}", "\\frac{1}{2}", 1.0, note="not numeric, exact match")
    add("math", "\\frac{1}{2}", "\\frac{1}{3}", 0.0)
    add("math", "\\frac{1}{2}", "one half", 1.0, judge_equivalent=True)
    add("math", "\\frac{1}{2}", "one third", 0.0, judge_equivalent=False)
    for domain in ("physics", "chemistry"):
        for ref, cand, eq in [("9.8 m/s^2", "9.80 m/s^2", True), ("2 mol", "2.0 mol", True),
                              ("300 K", "27 C", True), ("5 kg", "5 g", False), ("1.2 J", "1.2", False)]:
            add(domain, ref, cand, 1.0 if eq else 0.0, judge_equivalent=eq)
        add(domain, "6.02e23", "6.02E23", 1.0, note="exponent marker is not a unit")


def gen_chart(rng: random.Random):
    for _ in range(6):
        y = rng.randint(1950, 2030)
        add("chart", str(y), str(y), 1.0)
        add("chart", str(y), str(y + rng.choice([-1, 1])), 0.0)
    add("chart", "1999", "1999.0", 1.0)
    for _ in range(10):
        r = Fraction(rng.randint(100, 999999), 100)
        rel = rng.choice([Fraction(1, 10**4), Fraction(1, 10**3), Fraction(2, 10**3),
                          Fraction(1, 100), Fraction(1, 20)])
        c = r * (1 + rel * rng.choice([-1, 1]))
        cand = f"{float(c):.10g}"
        add("chart", str(float(r)), cand, 1.0 if within(Fraction(cand), r, 5e-3) else 0.0)
    add("chart", "Q3", "q3", 1.0)
    add("chart", "Q3", "Q4", 0.0)


_ALPHA = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,-éüß"


def gen_ocr(rng: random.Random):
    for _ in range(30):
        ref = "".join(rng.choice(_ALPHA) for _ in range(rng.randint(1, 40))).strip() or "x"
        cand = list(ref)
        for _ in range(rng.randint(0, 6)):
            op = rng.randrange(3)
            pos = rng.randrange(len(cand) + 1)
            if op == 0:
                cand.insert(pos, rng.choice(_ALPHA))
            elif cand and pos < len(cand):
                if op == 1:
                    del cand[pos]
                else:
                    cand[pos] = rng.choice(_ALPHA)
        cand = "".join(cand).strip()
        add("ocr", ref, cand, ocr_oracle(cand, ref), 1e-12)
    add("ocr", "", "", 1.0, 1e-12)
    add("ocr", "kitten", "sitting", ocr_oracle("sitting", "kitten"), 1e-12)


def _rand_box(rng, x0, y0):
    w, h = rng.randint(20, 80), rng.randint(20, 80)
    return [x0, y0, x0 + w, y0 + h]


def gen_grounding(rng: random.Random):
    for _ in range(24):
        n = rng.randint(1, 4)
        cells = rng.sample(range(16), n)
        gt = [_rand_box(rng, 20 + 240 * (c % 4), 20 + 240 * (c // 4)) for c in cells]
        pred = []
        for b in gt:
            roll = rng.random()
            if roll < 0.5:
                d = rng.randint(0, 6)
                pred.append([b[0] + d, b[1], b[2] + d, b[3]])
            elif roll < 0.8:
                w = b[2] - b[0]
                s = rng.randint(w // 3, w)
                pred.append([b[0] + s, b[1], b[2] + s, b[3]])
        if rng.random() < 0.3:
            pred.append(_rand_box(rng, 900, 900))
        rng.shuffle(pred)
        tau = rng.choice([0.5, 0.5, 0.3, 0.7])
        expect = best_matching(pred, gt, tau) / len(gt)
        extra = {} if tau == 0.5 else {"tau": tau}
        add("grounding", boxes_text(gt), boxes_text(pred), expect, 1e-12, **extra)
    add("grounding", boxes_text([[0, 0, 10, 10]]), "[[0,0,10]]", 0.0, 1e-12, note="no box parsed")
    add("grounding", boxes_text([[0, 0, 10, 10]]), "[[5,5,1,1]]", 0.0, 1e-12, note="degenerate box")


def gen_gui(rng: random.Random):
    for _ in range(10):
        b = _rand_box(rng, rng.randint(0, 800), rng.randint(0, 800))
        s = rng.randint(0, b[2] - b[0])
        moved = [b[0] + s, b[1], b[2] + s, b[3]]
        ok = iou_q(moved, b) >= Fraction(1, 2)
        add("gui_agent", action("click", b), action("click", moved), 1.0 if ok else 0.0)
    add("gui_agent", action("type", text="hello"), action("type", text="hello"), 1.0)
    add("gui_agent", action("type", text="hello"), action("type", text="hullo"), 0.0)
    add("gui_agent", action("press", text="enter"), action("press", text=" enter "), 1.0)
    add("gui_agent", action("select", [0, 0, 10, 10], subtask="grounding"),
        action("select", [1, 0, 11, 10]), 1.0)
    add("gui_agent", action("answer", text="Settings", subtask="qa"), action("answer", text="settings"), 1.0)
    add("gui_agent", action("answer", text="Settings", subtask="qa"), action("answer", text="Preferences"), 1.0,
        judge_equivalent=True)
    add("gui_agent", action("click", [0, 0, 10, 10]), "click somewhere", 0.0, note="not an action record")


def gen_exact(rng: random.Random):
    pools = {
        "vqa": ["red", "two", "cat", "7", "yes", "no", "umbrella"],
        "spatial": ["left", "right", "above", "below", "behind", "in front"],
        "video": ["3", "walking", "the man", "12", "opens the door"],
    }
    for domain, pool in pools.items():
        for _ in range(6):
            a, b = rng.sample(pool, 2)
            add(domain, a, a, 1.0)
            add(domain, a, a.upper() + "  ", 1.0)
            add(domain, a, b, 0.0)
        add(domain, "3", "3.0", 1.0)
        add(domain, "ten", "10", 1.0, judge_equivalent=True)


def gen_semantic(rng: random.Random):
    pairs = [("Paris, France", "paris france"), ("Kyoto, Japan", "Osaka, Japan"),
             ("The report recommends more audits.", "More audits are recommended."),
             ("Revenue fell in Q2.", "Revenue rose in Q2.")]
    for domain in ("long_document", "geoguess"):
        for ref, cand in pairs:
            for eq in (True, False):
                add(domain, ref, cand, 1.0 if eq else 0.0, judge_equivalent=eq)
        add(domain, "Lisbon", "lisbon", 0.0, note="semantic domains ask the judge first; stub says no")
        add(domain, "Lisbon", "Lisbon", 0.0, judge_equivalent=False)


def gen_gates(rng: random.Random):
    mixed = "".join("汉a"[i % 2] for i in range(20))
    rep = "abcdefghij" * 3
    add("math", "7", f"<think>t</think><answer>{boxed('7')} or {boxed('8')}</answer>", 0.0,
        note="two boxed spans")
    add("math", "7", f"<think>t</think><answer>{BOX_OPEN}7</answer>", 0.0, note="unbalanced box")
    add("math", "7", "<answer>7</answer><think>t</think>", 0.0, note="tag order")
    add("math", "7", "preamble <think>t</think><answer>7</answer>", 0.0, note="text before think")
    add("math", "7", "<think>t<answer>7</answer>", 0.0, note="unclosed think")
    add("math", "7", "<think>t</think><answer>7</answer>", 1.0)
    add("math", "7", "<think>t</think><answer>  </answer>", 0.0, note="empty answer")
    add("vqa", "7", f"<think>{mixed}</think><answer>7</answer>", 0.0, note="mixed-script think")
    add("vqa", "7", f"<think>{rep}</think><answer>7</answer>", 0.0, note="repetitive think")
    add("vqa", "7", "<think>数学 problem 求解</think><answer>7</answer>", 1.0, note="low mixing passes")
    add("geoguess", "Oslo", f"<think>fjords</think><answer>{boxed('Oslo')}</answer>", 0.0,
        verifiable=False, judge_equivalent=True)
    add("geoguess", "Oslo", "<think>fjords</think><answer>Oslo</answer>", 1.0, verifiable=False,
        judge_equivalent=True)
    add("chart", "41.8", f"<think>read the bar</think>{boxed('41.80')}", 1.0)
    add("ocr", "boxed", f"<think>x</think><answer>{boxed('boxed')}</answer>", 1.0, 1e-12)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "reward_fixtures.jsonl"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    hand_examples()
    for gen in (gen_math, gen_chart, gen_ocr, gen_grounding, gen_gui, gen_exact, gen_semantic, gen_gates):
        gen(rng)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for c in cases:
            fh.write(json.dumps(c, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"{len(cases)} cases -> {args.out}")


if __name__ == "__main__":
    main()
