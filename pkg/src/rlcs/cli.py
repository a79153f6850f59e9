"""Command-line entry point: ``rlcs {verify,simulate,schedule,geom,selftest}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from rlcs import kernels
from rlcs.config import ConfigInvalid, ExperimentConfig, load_config
from rlcs.harness import DataError, load_dataset, load_fixtures, read_jsonl, verify_fixtures, write_run
from rlcs.judge import make_judge
from rlcs.sched import ItemExceedsCapacity, WorkItem, balance_ranks, pack_microsteps, with_cost_mode

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg.validate()


def cmd_verify(args) -> int:
    cfg = _config(args)
    cases = load_fixtures(args.fixtures)
    j = cfg.judge
    judge = make_judge(j.backend, url=j.url, table=args.judge_table or j.table, timeout=j.timeout,
                       retries=j.retries, prompt=j.prompt, cache=j.cache)
    report = verify_fixtures(cases, cfg, judge)
    lines = report.lines()
    if report.failures:
        lines.append(f"FAIL {report.failures[0]}")
        if len(report.failures) > 1:
            lines.append(f"... and {len(report.failures) - 1} more failure(s)")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    from rlcs.rollout import run_experiment

    cfg = _config(args)
    if args.iterations is not None:
        cfg.iterations = args.iterations
    if args.no_curriculum:
        cfg.curriculum.enabled = False
    if args.no_expansion:
        cfg.expansion.enabled = False
    cfg.validate()
    dataset = load_dataset(args.dataset) if args.dataset else None
    log = run_experiment(cfg, dataset)
    out = args.out or f"runs/seed{cfg.seed}"
    paths = write_run(log, cfg, out)
    print(f"wrote {paths['metrics']} ({len(log.records)} iterations)")
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = _config(args)
    ranks = args.ranks if args.ranks is not None else cfg.scheduler.ranks
    capacity = args.capacity if args.capacity is not None else cfg.scheduler.capacity
    mode = args.cost_mode or cfg.scheduler.cost_mode
    rows = read_jsonl(args.items)
    try:
        items = [WorkItem(str(r["id"]), int(r["length"])) for r in rows]
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{args.items}: bad item record: {exc}") from None
    items = with_cost_mode(items, mode)
    if not items:
        _emit(json.dumps({"assignment": None, "plan": None}) + "\n", args.out)
        return EXIT_OK
    assignment = balance_ranks(items, ranks)
    per_rank = []
    for r in range(ranks):
        mine = [it for it in items if assignment.rank_of[it.id] == r]
        per_rank.append(pack_microsteps(mine, capacity).bins if mine else [])
    doc = {
        "ranks": ranks,
        "capacity": capacity,
        "cost_mode": mode,
        "assignment": {"rank_of": assignment.rank_of, "loads": assignment.loads},
        "plan": {"bins": pack_microsteps(items, capacity).bins, "per_rank": per_rank},
    }
    _emit(json.dumps(doc, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_geom(args) -> int:
    from rlcs.geom import PatchGrid, adapt_table

    try:
        table = json.loads(Path(args.table).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{args.table}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.table}: invalid JSON: {exc.msg}") from None
    arr = np.asarray(table, dtype=np.float64)
    out = adapt_table(arr, PatchGrid(args.height, args.width), args.a)
    if arr.ndim == 2:
        out = out[:, :, 0]
    _emit(json.dumps(out.tolist()) + "\n", args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from rlcs import _pykernels
    from rlcs.geom import PatchGrid, adapt_table
    from rlcs.rewards import Domain, RewardRequest, score, verify_ocr
    from rlcs.rollout import group_advantages

    rng = np.random.default_rng(args.seed or 0)
    checks = []

    def check(name, ok):
        checks.append((name, bool(ok)))

    check("math 43 == 43.0", score(RewardRequest(Domain.MATH, "", "43", "43.0")).score == 1.0)
    check("ocr 43 vs 43.0 < 1", verify_ocr("43.0", "43").score < 1.0)
    words = ["kitten", "sitting", "", "flaw", "lawn", "ünïcødé", "汉字abc"]
    check("levenshtein backends agree", all(
        kernels.levenshtein(a, b) == _pykernels.levenshtein(a, b) for a in words for b in words))
    t = rng.normal(size=(5, 7, 3))
    check("bicubic identity", np.allclose(adapt_table(t, PatchGrid(5, 7)), t, atol=1e-9))
    check("resample backends agree", np.allclose(
        kernels.cubic_resample(t, 9, 4, -0.5), _pykernels.cubic_resample(t, 9, 4, -0.5), atol=1e-12))
    costs = sorted(rng.integers(1, 100, size=20).astype(float).tolist(), reverse=True)
    check("lpt backends agree", list(kernels.lpt(costs, 3)[0]) == list(_pykernels.lpt(costs, 3)[0]))
    check("advantages sum to 0", abs(sum(group_advantages([1, 0, 0, 1, 1]))) < 1e-12)
    width = max(len(n) for n, _ in checks)
    lines = [f"backend: {kernels.BACKEND}"]
    lines += [f"{name:<{width}}  {'ok' if ok else 'FAIL'}" for name, ok in checks]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", help="output file (directory for simulate)")

    p = argparse.ArgumentParser(prog="rlcs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="score a reward fixture corpus")
    v.add_argument("fixtures", help="fixture JSON Lines file")
    v.add_argument("--judge-table", help="stub judge table (JSON Lines)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common], help="run the synthetic RL loop")
    s.add_argument("--dataset", help="dataset JSON Lines; synthesized from the config if omitted")
    s.add_argument("--iterations", type=int)
    s.add_argument("--no-curriculum", action="store_true", help="uniform sampling")
    s.add_argument("--no-expansion", action="store_true", help="fixed rollout count")
    s.set_defaults(func=cmd_simulate)

    sc = sub.add_parser("schedule", parents=[common], help="balance ranks and pack micro-steps")
    sc.add_argument("items", help='items JSON Lines {"id","length"}')
    sc.add_argument("--ranks", type=int)
    sc.add_argument("--capacity", type=int)
    sc.add_argument("--cost-mode", choices=["linear", "quadratic"])
    sc.set_defaults(func=cmd_schedule)

    g = sub.add_parser("geom", parents=[common], help="resample a position-embedding table")
    g.add_argument("table", help="H x W (x D) JSON array")
    g.add_argument("--height", type=int, required=True)
    g.add_argument("--width", type=int, required=True)
    g.add_argument("-a", type=float, default=-0.5, help="cubic kernel parameter")
    g.set_defaults(func=cmd_geom)

    t = sub.add_parser("selftest", parents=[common], help="quick consistency checks")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ItemExceedsCapacity as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigInvalid, DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
