import re

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.failed:
        if _OUTCOMES.get(key) != "FAIL":
            _OUTCOMES[key] = "PASS" if report.passed else "FAIL"
        if report.failed:
            _OUTCOMES[(key, "why")] = str(report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash")
                                          else report.longrepr).splitlines()[0]


def pytest_terminal_summary(terminalreporter):
    rows = sorted(k for k in _OUTCOMES if isinstance(k[0], int))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, name in rows:
        status = _OUTCOMES[(num, name)]
        line = f"criterion {num:2d} {status}  {name.replace('_', ' ')}"
        why = _OUTCOMES.get(((num, name), "why"))
        if why:
            line += f"  ({why})"
        terminalreporter.write_line(line)
