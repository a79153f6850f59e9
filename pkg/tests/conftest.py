import importlib

import pytest

from rlcs import _pykernels, kernels

BACKENDS = [_pykernels]
try:
    BACKENDS.insert(0, importlib.import_module("rlcs._kernels"))
except ImportError:  # extension not built
    pass


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


@pytest.fixture
def active_backend():
    return kernels.BACKEND


ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the terminal summary prints them all."""

    def report(number: int, ok: bool, text: str) -> bool:
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
