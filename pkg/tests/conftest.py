import os
import tempfile

import pytest

# keep the profile cache out of the user's home during tests
os.environ.setdefault("CGL_VORTEX_CACHE", tempfile.mkdtemp(prefix="cgl_vortex_test_cache_"))

from cgl_vortex.profile import solve_profile  # noqa: E402


@pytest.fixture(scope="session")
def profile():
    return solve_profile()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
