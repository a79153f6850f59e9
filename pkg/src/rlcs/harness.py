"""Dataset and fixture ingestion, fixture verification, metrics persistence."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from rlcs.config import ExperimentConfig
from rlcs.judge import JudgeClient, JudgeVerdict
from rlcs.rewards import Domain, RewardRequest, score
from rlcs.rollout import MetricsLog

FIXTURE_KEYS = ("domain", "question", "reference", "candidate", "expect_score", "tol")
FIXTURE_OPTIONAL = ("verifiable", "judge_equivalent", "tau", "rtol", "note")
BASE_COLUMNS = ("iteration", "mean_skill", "not_valid_rate", "ema", "valid_fill", "reward_mean")


class DataError(ValueError):
    """Malformed input file; the message names the path and line."""


def read_jsonl(path: str | Path) -> list[dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        obj["_line"] = lineno
        out.append(obj)
    return out


def write_jsonl(path: str | Path, rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def load_dataset(path: str | Path) -> list[dict]:
    rows = read_jsonl(path)
    for row in rows:
        line = row.pop("_line")
        for key in ("id", "domain", "reference"):
            if key not in row:
                raise DataError(f"{path}:{line}: missing {key!r}")
        for key in ("offline_tier", "human_tier"):
            v = row.get(key)
            if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
                raise DataError(f"{path}:{line}: {key} must be an integer")
    return rows


def load_fixtures(path: str | Path) -> list[dict]:
    rows = read_jsonl(path)
    for row in rows:
        line = row["_line"]
        missing = [k for k in FIXTURE_KEYS if k not in row]
        if missing:
            raise DataError(f"{path}:{line}: missing {', '.join(missing)}")
        extra = set(row) - set(FIXTURE_KEYS) - set(FIXTURE_OPTIONAL) - {"_line"}
        if extra:
            raise DataError(f"{path}:{line}: unknown key(s) {', '.join(sorted(extra))}")
        row["_path"] = str(path)
    return rows


class _FixedJudge:
    """Answers every query with one scripted verdict; scoped to a single case."""

    def __init__(self, equivalent: bool):
        self._verdict = JudgeVerdict(equivalent, 1.0)

    def judge(self, question, reference, candidate, domain):
        return self._verdict


@dataclass
class CaseFailure:
    where: str
    domain: str
    expected: float
    got: float
    diagnostic: str

    def __str__(self):
        return (f"{self.where}: {self.domain} expected {self.expected:g} got {self.got:g}"
                f" ({self.diagnostic})")


@dataclass
class VerifyReport:
    passed: Counter = field(default_factory=Counter)
    total: Counter = field(default_factory=Counter)
    failures: list[CaseFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def n_cases(self) -> int:
        return sum(self.total.values())

    def lines(self) -> list[str]:
        out = [f"{d}: {self.passed[d]}/{self.total[d]}" for d in sorted(self.total)]
        out.append(f"total: {sum(self.passed.values())}/{self.n_cases}")
        return out


def verify_fixtures(cases: Iterable[Mapping], cfg: ExperimentConfig, judge: JudgeClient | None) -> VerifyReport:
    report = VerifyReport()
    base = cfg.reward_config()
    for case in cases:
        where = f"{case.get('_path', '<fixtures>')}:{case.get('_line', '?')}"
        domain = case["domain"]
        req = RewardRequest(domain, case["question"], case["reference"], case["candidate"],
                            bool(case.get("verifiable", True)))
        conf = base
        if "tau" in case or "rtol" in case:
            rtol = {**base.rtol, domain: case["rtol"]} if "rtol" in case else base.rtol
            conf = replace(base, rtol=rtol, tau=case.get("tau", base.tau))
        j = _FixedJudge(bool(case["judge_equivalent"])) if "judge_equivalent" in case else judge
        res = score(req, j, conf)
        report.total[domain] += 1
        if abs(res.score - case["expect_score"]) <= case["tol"]:
            report.passed[domain] += 1
        else:
            report.failures.append(CaseFailure(where, domain, case["expect_score"], res.score, res.diagnostic))
    return report


def known_domains() -> list[str]:
    return [d.value for d in Domain]


# ---------------------------------------------------------------- metrics

def metrics_columns(tier_count: int) -> list[str]:
    return [*BASE_COLUMNS, *(f"tier_pop_{t}" for t in range(tier_count))]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def metrics_csv(log: MetricsLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(metrics_columns(log.tier_count))
    for rec in log.records:
        w.writerow([_fmt(rec[c]) for c in BASE_COLUMNS] + [_fmt(p) for p in rec["tier_pops"]])
    return buf.getvalue()


def write_run(log: MetricsLog, cfg: ExperimentConfig, out_dir: str | Path) -> dict[str, Path]:
    """metrics.csv, events.jsonl and final_state.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.csv",
        "events": out / "events.jsonl",
        "final": out / "final_state.json",
    }
    paths["metrics"].write_text(metrics_csv(log), encoding="utf-8")
    write_jsonl(paths["events"], ({"event": "iteration", **rec} for rec in log.records))
    final = {"seed": cfg.seed, "iterations": len(log.records), **log.final_state()}
    paths["final"].write_text(json.dumps(final, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return paths
