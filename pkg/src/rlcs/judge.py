"""Semantic-equivalence judges.

Three interchangeable backends share one call signature,
``judge(question, reference, candidate, domain) -> JudgeVerdict``:

* ``RemoteJudge`` posts JSON to an HTTP endpoint (``POST /judge``).
* ``StubJudge`` answers from a fixed table; anything missing is non-equivalent.
* ``FallbackJudge`` does normalized exact matching.
"""
from __future__ import annotations

import json
import os
import socket
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Protocol

ENV_JUDGE_URL = "RLCS_JUDGE_URL"


class JudgeError(RuntimeError):
    pass


class JudgeTimeout(JudgeError):
    pass


class ProtocolError(JudgeError):
    pass


class JudgeUnavailable(JudgeError):
    pass


@dataclass(frozen=True)
class JudgeVerdict:
    equivalent: bool
    confidence: float = 1.0
    latency_ms: int = 0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be nonnegative")


class JudgeClient(Protocol):
    def judge(self, question: str, reference: str, candidate: str, domain: str) -> JudgeVerdict: ...


def normalize_answer(text: str) -> str:
    """Trim, collapse internal whitespace, case-fold."""
    return " ".join(text.split()).casefold()


class FallbackJudge:
    def judge(self, question, reference, candidate, domain):
        return JudgeVerdict(normalize_answer(reference) == normalize_answer(candidate))


class StubJudge:
    """Deterministic table-backed judge for tests and offline fixtures."""

    def __init__(self, table: Mapping[tuple[str, str], bool] | None = None):
        self._table = MappingProxyType(dict(table or {}))

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "StubJudge":
        return cls({(r["reference"], r["candidate"]): bool(r["equivalent"]) for r in records})

    @classmethod
    def from_jsonl(cls, path: str | os.PathLike) -> "StubJudge":
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    records.append({k: rec[k] for k in ("reference", "candidate", "equivalent")})
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad stub record: {exc}") from None
        return cls.from_records(records)

    def merged(self, extra: Mapping[tuple[str, str], bool]) -> "StubJudge":
        table = dict(self._table)
        table.update(extra)
        return StubJudge(table)

    def __len__(self):
        return len(self._table)

    def judge(self, question, reference, candidate, domain):
        return JudgeVerdict(self._table.get((reference, candidate), False))


def parse_verdict_body(body: bytes) -> tuple[bool, float]:
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed judge response: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("judge response is not a JSON object")
    eq, conf = obj.get("equivalent"), obj.get("confidence")
    if not isinstance(eq, bool):
        raise ProtocolError("'equivalent' missing or not a boolean")
    if isinstance(conf, bool) or not isinstance(conf, (int, float)) or not 0 <= conf <= 1:
        raise ProtocolError("'confidence' missing or not a number in [0, 1]")
    return eq, float(conf)


class RemoteJudge:
    """HTTP client for an external judge service.

    Each attempt is bounded by ``timeout`` seconds; timeouts, connection
    failures and 5xx responses are retried up to ``retries`` more times, so
    a call never takes longer than ``(retries + 1) * timeout``. Malformed
    bodies and 4xx responses fail immediately.
    """

    def __init__(
        self,
        url: str,
        timeout: float = 10.0,
        retries: int = 2,
        prompt: str | None = None,
        cache: bool = False,
    ):
        if timeout <= 0 or retries < 0:
            raise ValueError("timeout must be positive and retries nonnegative")
        self.url = url.rstrip("/")
        if not self.url.endswith("/judge"):
            self.url += "/judge"
        self.timeout = timeout
        self.retries = retries
        self.prompt = prompt
        self._cache: dict | None = {} if cache else None
        self._lock = threading.Lock()
        self.attempts = 0

    def _post(self, payload: bytes) -> bytes:
        req = urllib.request.Request(
            self.url,
            data=payload,
            headers={"Content-Type": "application/json; charset=utf-8"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code >= 500:
                raise JudgeUnavailable(f"judge returned HTTP {exc.code}") from None
            raise ProtocolError(f"judge returned HTTP {exc.code}") from None
        except (socket.timeout, TimeoutError) as exc:
            raise JudgeTimeout(str(exc)) from None
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                raise JudgeTimeout(str(exc.reason)) from None
            raise JudgeUnavailable(str(exc.reason)) from None
        except (ConnectionError, OSError) as exc:
            raise JudgeUnavailable(str(exc)) from None

    def judge(self, question, reference, candidate, domain):
        key = (domain, question, reference, candidate)
        if self._cache is not None:
            with self._lock:
                if key in self._cache:
                    return self._cache[key]
        body = {"domain": domain, "question": question, "reference": reference, "candidate": candidate}
        if self.prompt is not None:
            body["prompt"] = self.prompt
        payload = json.dumps(body, ensure_ascii=False).encode("utf-8")
        start = time.monotonic()
        last: JudgeError | None = None
        for _ in range(self.retries + 1):
            with self._lock:
                self.attempts += 1
            try:
                raw = self._post(payload)
            except (JudgeTimeout, JudgeUnavailable) as exc:
                last = exc
                continue
            eq, conf = parse_verdict_body(raw)
            verdict = JudgeVerdict(eq, conf, int((time.monotonic() - start) * 1000))
            if self._cache is not None:
                with self._lock:
                    self._cache[key] = verdict
            return verdict
        assert last is not None
        raise last


def make_judge(
    backend: str = "stub",
    *,
    url: str | None = None,
    table: str | os.PathLike | None = None,
    timeout: float = 10.0,
    retries: int = 2,
    prompt: str | None = None,
    cache: bool = False,
) -> JudgeClient:
    """Build a judge. ``RLCS_JUDGE_URL`` in the environment selects the remote
    backend regardless of ``backend``."""
    env_url = os.environ.get(ENV_JUDGE_URL)
    if env_url:
        return RemoteJudge(env_url, timeout=timeout, retries=retries, prompt=prompt, cache=cache)
    if backend == "remote":
        if not url:
            raise ValueError("remote judge needs a url")
        return RemoteJudge(url, timeout=timeout, retries=retries, prompt=prompt, cache=cache)
    if backend == "stub":
        return StubJudge.from_jsonl(table) if table else StubJudge()
    if backend == "fallback":
        return FallbackJudge()
    raise ValueError(f"unknown judge backend {backend!r}")
