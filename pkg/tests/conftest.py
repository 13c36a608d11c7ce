import pytest

from bipo import builtin_cover, make_grid

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture(scope="session")
def grid():
    return make_grid(-2.0, 2.0, 161)


@pytest.fixture(scope="session")
def fan(grid):
    return builtin_cover("quadratic_fan", {"lambda_min": 0.25, "lambda_max": 4.0, "K": 65}, grid)


@pytest.fixture(scope="session")
def fan_computed(grid):
    return builtin_cover("quadratic_fan", {"lambda_min": 0.25, "lambda_max": 4.0, "K": 65, "star": "computed"}, grid)


@pytest.fixture(scope="session")
def single(grid):
    return builtin_cover("singleton", {"function": {"kind": "quadratic", "coeff": 1.0}}, grid)


@pytest.fixture(scope="session")
def two_point(grid):
    return builtin_cover("quadratic_fan", {"K": 2, "lambda_set": "finite"}, grid)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            n, detail = value
            prev = _CRITERIA.get(n, (True, []))
            _CRITERIA[n] = (prev[0] and report.passed, prev[1] + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, details = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  " + "; ".join(details))
