import json
import subprocess
import sys
from pathlib import Path

import pytest

from rlcs.cli import main

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_corpus(capsys):
    code, out, _ = run(["verify", DATA / "reward_fixtures.jsonl"], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1].startswith("total: ")
    assert "FAIL" not in out


def test_verify_empty(tmp_path, capsys):
    p = tmp_path / "e.jsonl"
    p.write_text("")
    code, out, _ = run(["verify", p], capsys)
    assert code == 0 and "total: 0/0" in out


def test_verify_reports_bad_line(tmp_path, capsys):
    p = tmp_path / "f.jsonl"
    good = json.dumps({"domain": "vqa", "question": "", "reference": "a", "candidate": "a", "expect_score": 1, "tol": 0})
    p.write_text(good + "\n{broken\n")
    code, _, err = run(["verify", p], capsys)
    assert code == 2 and f"{p}:2" in err


def test_verify_reports_first_failure(tmp_path, capsys):
    p = tmp_path / "f.jsonl"
    rows = [{"domain": "vqa", "question": "", "reference": "a", "candidate": c, "expect_score": 1, "tol": 0}
            for c in ("a", "b", "c")]
    p.write_text("\n".join(map(json.dumps, rows)))
    code, out, _ = run(["verify", p], capsys)
    assert code == 1 and f"FAIL {p}:2" in out and "1 more" in out


def test_verify_missing_file(tmp_path, capsys):
    code, _, err = run(["verify", tmp_path / "nope.jsonl"], capsys)
    assert code == 2 and "nope.jsonl" in err


def test_simulate_outputs(tmp_path, capsys):
    args = ["simulate", "--dataset", DATA / "sample_dataset.jsonl", "--iterations", 4, "--seed", 3]
    assert run(args + ["--out", tmp_path / "a"], capsys)[0] == 0
    assert run(args + ["--out", tmp_path / "b"], capsys)[0] == 0
    for name in ("metrics.csv", "events.jsonl", "final_state.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    lines = (tmp_path / "a" / "metrics.csv").read_text().splitlines()
    assert lines[0] == ("iteration,mean_skill,not_valid_rate,ema,valid_fill,reward_mean,"
                        "tier_pop_0,tier_pop_1,tier_pop_2,tier_pop_3,tier_pop_4")
    assert len(lines) == 5
    events = [json.loads(x) for x in (tmp_path / "a" / "events.jsonl").read_text().splitlines()]
    assert [e["iteration"] for e in events] == [0, 1, 2, 3]
    final = json.loads((tmp_path / "a" / "final_state.json").read_text())
    assert final["seed"] == 3 and final["iterations"] == 4


def test_simulate_zero_iterations_header_only(tmp_path, capsys):
    assert run(["simulate", "--iterations", 0, "--out", tmp_path], capsys)[0] == 0
    assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 1


def test_simulate_flags(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"iterations": 3, "batch_size": 4, "dataset": {"size": 32}}))
    for flag in ("--no-curriculum", "--no-expansion"):
        assert run(["simulate", "--config", cfg, flag, "--out", tmp_path / flag], capsys)[0] == 0
    cfg.write_text('{"bogus": 1}')
    code, _, err = run(["simulate", "--config", cfg, "--out", tmp_path / "x"], capsys)
    assert code == 2 and "unknown key" in err


def test_schedule(tmp_path, capsys):
    p = tmp_path / "items.jsonl"
    p.write_text("\n".join(json.dumps({"id": k, "length": n}) for k, n in zip("abcd", (9, 1, 5, 5))))
    code, out, _ = run(["schedule", p, "--ranks", 2, "--capacity", 10], capsys)
    doc = json.loads(out)
    assert code == 0 and sum(doc["assignment"]["loads"]) == 20 and max(doc["assignment"]["loads"]) == 10
    code, out, _ = run(["schedule", DATA / "sched_items.jsonl", "--ranks", 2, "--capacity", 10], capsys)
    assert json.loads(out)["assignment"]["loads"] == [14.0, 17.0]


def test_schedule_oversize(tmp_path, capsys):
    p = tmp_path / "items.jsonl"
    p.write_text('{"id": "big", "length": 99}\n')
    code, _, err = run(["schedule", p, "--capacity", 10], capsys)
    assert code == 1 and "'big'" in err


def test_geom(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, _, _ = run(["geom", DATA / "ramp_table.json", "--height", 8, "--width", 8, "--out", out], capsys)
    src = json.loads((DATA / "ramp_table.json").read_text())
    got = json.loads(out.read_text())
    assert code == 0 and max(abs(a - b) for ra, rb in zip(src, got) for a, b in zip(ra, rb)) < 1e-9
    code, out_, _ = run(["geom", DATA / "ramp_table.json", "--height", 2, "--width", 3], capsys)
    assert code == 0 and len(json.loads(out_)) == 2


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0 and "FAIL" not in out


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "rlcs.cli", "selftest"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_judge_table_flag(tmp_path, capsys):
    fx = tmp_path / "f.jsonl"
    fx.write_text(json.dumps({"domain": "long_document", "question": "", "reference": "0.5", "candidate": "1/2",
                              "expect_score": 1, "tol": 0}))
    assert run(["verify", fx], capsys)[0] == 1
    assert run(["verify", fx, "--judge-table", DATA / "judge_stub.jsonl"], capsys)[0] == 0


@pytest.mark.parametrize("argv", [[], ["bogus"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit):
        main(argv)
