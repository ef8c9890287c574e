import pytest

_acceptance_results: dict[str, tuple[str, bool]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "test_acceptance" in item.nodeid:
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance_results[item.nodeid] = (doc, rep.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for doc, passed in _acceptance_results.values():
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {doc}")
