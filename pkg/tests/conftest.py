from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from rprcusp.geometry import reference_geometry, second_geometry  # noqa: E402

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=100,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def gstar():
    return reference_geometry()


@pytest.fixture(scope="session")
def gseg():
    return second_geometry()


@pytest.fixture(scope="session", params=["reference", "segment"])
def any_geom(request):
    return reference_geometry() if request.param == "reference" else second_geometry()


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_report(request):
    """Collects one verdict line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE_KEY, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = config.stash.get(_ACCEPTANCE_KEY, None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report):
        terminalreporter.write_line(report[key])
