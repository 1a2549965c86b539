import pytest

from phishdqn import dataset, synthetic

_criteria: dict[str, list[str]] = {}
_reports: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or rep.outcome != "passed":
        _criteria.setdefault(marker.args[0], []).append(rep.outcome)
    for name, text in rep.user_properties:
        if name == "report" and rep.when == "call":
            _reports.append(text)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcomes in _criteria.items():
        if "failed" in outcomes:
            status = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"{status}  {name}")
    for text in _reports:
        terminalreporter.write_line("")
        terminalreporter.write_line(text)


@pytest.fixture(scope="session")
def rule_data():
    records, cache = synthetic.rule_corpus(512, seed=0)
    return records, cache, dataset.vectorize(records, cache)


@pytest.fixture(scope="session")
def balanced_data():
    records, cache = synthetic.balanced_corpus(2000, seed=0)
    return records, cache, dataset.vectorize(records, cache)
