import pytest

ACCEPTANCE_IDS = tuple(range(1, 11))


def pytest_configure(config):
    config._acceptance_results = {}


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    store = request.config._acceptance_results

    def record(number, passed, detail):
        store[number] = (bool(passed), detail)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance_results", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in ACCEPTANCE_IDS:
        if n in store:
            ok, detail = store[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        else:
            terminalreporter.write_line(f"[NOT RUN] criterion {n}: deselected, or errored before reporting")
