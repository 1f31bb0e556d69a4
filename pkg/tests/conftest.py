"""Shared pytest hooks: one summary line per acceptance criterion."""
import re
from collections import OrderedDict

_CRITERION = re.compile(r"::test_(A\d+)_")


def pytest_terminal_summary(terminalreporter):
    outcomes: "OrderedDict[str, list[str]]" = OrderedDict()
    details: dict[str, list[str]] = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m is None or rep.when not in ("call", "setup"):
                continue
            if rep.when == "setup" and status == "passed":
                continue
            outcomes.setdefault(m.group(1), []).append(status)
            details.setdefault(m.group(1), []).extend(
                f"{k}={v}" for k, v in getattr(rep, "user_properties", []))
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(outcomes, key=lambda k: int(k[1:])):
        ok = all(s == "passed" for s in outcomes[key])
        n = len(outcomes[key])
        line = f"{key}: {'PASS' if ok else 'FAIL'} ({n} check{'s' if n > 1 else ''})"
        if details.get(key):
            line += "  " + ", ".join(details[key])
        terminalreporter.write_line(line)
