import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from localfrac import _pycore

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

try:
    from localfrac import _ccore
except ImportError:
    _ccore = None

CORES = [_pycore] + ([_ccore] if _ccore is not None else [])


@pytest.fixture(params=CORES, ids=lambda m: m.NAME)
def core(request):
    """Each available numerical core in turn."""
    return request.param


# acceptance lines collected during the run, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
