"""Prints the acceptance checklist after every run that touches it."""


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    outcomes = {}
    for status, reports in terminalreporter.stats.items():
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            name = nodeid.split("::")[-1]
            if name not in CRITERIA:
                continue
            if status in ("failed", "error"):
                outcomes[name] = "FAIL"
            elif status == "passed" and getattr(report, "when", "call") == "call":
                outcomes.setdefault(name, "PASS")
    if not outcomes:
        return
    terminalreporter.section("acceptance checklist")
    for name, label in CRITERIA.items():
        if name in outcomes:
            terminalreporter.write_line(f"[ACCEPTANCE] {label}: {outcomes[name]}")
