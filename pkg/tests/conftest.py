import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disfl.corpus import read_annotated  # noqa: E402
from disfl.pipeline import bundled_seed_path  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def seed_path():
    return bundled_seed_path()


@pytest.fixture(scope="session")
def seed_corpus(seed_path):
    return read_annotated(seed_path)


@pytest.fixture(scope="session")
def three_path():
    return FIXTURES / "three.txt"


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, name, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {name}" + (f" ({detail})" if detail else ""))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
