import pytest

import helpers

ORACLES = ("derived", "paper", "trivial")


def pytest_collection_modifyitems(items):
    untagged = [i.nodeid for i in items
                if sum(1 for m in ORACLES if i.get_closest_marker(m)) != 1]
    if untagged:
        raise pytest.UsageError("tests need exactly one oracle tag (derived/paper/trivial):\n  "
                                + "\n  ".join(untagged))


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(helpers.ACCEPTANCE):
        ok, title, detail = helpers.ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
