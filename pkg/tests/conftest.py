import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=150, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE_KEY = pytest.StashKey[list]()


class AcceptanceLog:
    def __init__(self, lines):
        self.lines = lines

    def record(self, number, title, ok, detail=""):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"{status} criterion {number} ({title}): {detail}"
        self.lines.append(line)
        print(line)
        return ok


@pytest.fixture(scope="session")
def acceptance(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])
    return AcceptanceLog(lines)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
