import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or report.failed:
        prev = _ACCEPTANCE.get(key)
        if prev is None or prev[0] != "FAIL":
            _ACCEPTANCE[key] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), (verdict, detail) in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name}: {verdict}  {detail}")
