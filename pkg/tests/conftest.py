import pytest

from tlgcn.cli import main


@pytest.fixture(scope="session")
def tiny_prepared(tmp_path_factory):
    """Small planted edge list and its prepared container."""
    d = tmp_path_factory.mktemp("tiny")
    assert main(["synth", str(d / "edges.csv"), "--nodes", "16", "--slots", "4",
                 "--edges-per-slot", "40", "--seed", "3"]) == 0
    assert main(["prepare", str(d / "edges.csv"), "--slots", "4", "-o", str(d / "prep.npz")]) == 0
    return d


ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Collect one PASS/FAIL line per acceptance criterion."""
    def _record(cid: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {cid}: {detail}")
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
