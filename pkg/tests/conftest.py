import re

import pytest

from gridrisk.network import build_model, load_bundled_case


@pytest.fixture(scope="session")
def chain3():
    return build_model(load_bundled_case("chain3"))


@pytest.fixture(scope="session")
def ring4():
    return build_model(load_bundled_case("ring4"))


@pytest.fixture(scope="session")
def ieee14():
    return build_model(load_bundled_case("ieee14"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, printed after the run."""
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            match = re.search(r"test_criterion_(\d+)", getattr(report, "nodeid", ""))
            if match:
                num = int(match.group(1))
                name = report.nodeid.split("::")[-1]
                word = "PASS" if status == "passed" else "FAIL"
                outcomes[num] = (word, name)
    if outcomes:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(outcomes):
            word, name = outcomes[num]
            terminalreporter.write_line(f"CRITERION {num:02d}: {word} - {name}")
