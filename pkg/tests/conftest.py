import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(results):
        passed, title, details = results[number]
        tr.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}")
        for line in details:
            tr.write_line(f"               {line}")
