import collections

import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line: verdict("4.1", ok, "detail")."""
    def record(check, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {check}: {detail}"
        _LINES.append((check.split(".")[0], bool(ok), line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for _, _, line in _LINES:
        tr.write_line(line)
    by = collections.OrderedDict()
    for crit, ok, _ in _LINES:
        by.setdefault(crit, []).append(ok)
    tr.write_line("")
    for crit, oks in sorted(by.items(), key=lambda kv: int(kv[0])):
        tr.write_line(f"{'PASS' if all(oks) else 'FAIL'} criterion {crit} "
                      f"({sum(oks)}/{len(oks)} checks)")
