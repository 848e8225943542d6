"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

_results: dict[str, tuple[str, float]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        prev = _results.get(name, ("PASS", 0.0))
        status = "FAIL" if report.failed or prev[0] == "FAIL" else "PASS"
        _results[name] = (status, prev[1] + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_results, key=lambda n: int(n.split("_")[1])):
        status, secs = _results[name]
        terminalreporter.write_line(f"{status}  {name}  ({secs:.2f}s)")
