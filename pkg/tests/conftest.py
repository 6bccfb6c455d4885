from __future__ import annotations

import re
from pathlib import Path

import pytest
import yaml
from hypothesis import HealthCheck, settings

from goursat import Distribution, load_problem

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "goursat" / "fixtures"

settings.register_profile(
    "repo",
    max_examples=200,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

_CRITERIA: dict[int, list[tuple[str, str]]] = {}


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_distribution(name: str) -> Distribution:
    doc = load_problem(FIXTURES / f"{name}.yaml")
    return Distribution(doc.chart, doc.generators, doc.sampling, label=name)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def rational6() -> Distribution:
    return load_distribution("rational6")


@pytest.fixture(scope="session")
def marino() -> Distribution:
    return load_distribution("marino")


@pytest.fixture(scope="session")
def prolonged_marino() -> Distribution:
    return load_distribution("prolonged_marino")


@pytest.fixture(scope="session")
def coordinate_changes() -> dict:
    return yaml.safe_load((FIXTURES / "coordinate_changes.yaml").read_text())["changes"]


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if m:
        _CRITERIA.setdefault(int(m.group(1)), []).append((m.group(2), report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        ok = all(o == "passed" for _, o in parts)
        names = ", ".join(sorted({p for p, _ in parts}))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({names})")
