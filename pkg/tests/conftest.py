import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stripscot.domains import blocksworld_domain, blocksworld_problem, logistics_domain  # noqa: E402


@pytest.fixture
def bw():
    return blocksworld_domain()


@pytest.fixture
def logistics():
    return logistics_domain()


@pytest.fixture
def two_blocks():
    # a and b on the table; goal: b on a
    return blocksworld_problem([["a"], ["b"]], [("b", "a")], name="two")


@pytest.fixture
def sussman():
    # c on a, b on the table; goal: a on b on c
    return blocksworld_problem([["a", "c"], ["b"]], [("a", "b"), ("b", "c")], name="sussman")


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""
    name = request.node.name

    def record(ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
