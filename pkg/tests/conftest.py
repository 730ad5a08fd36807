import pytest

_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    label, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    detail = getattr(item, "criterion_detail", "")
    if rep.failed:
        reason = str(call.excinfo.value).strip().splitlines()
        detail = reason[0] if reason else call.excinfo.typename
    line = f"[{status}] criterion {label}: {title}" + (f" ({detail})" if detail else "")
    _LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record(request):
    """Attach a short measurement to the criterion's summary line."""

    def _record(text):
        request.node.criterion_detail = text

    return _record
