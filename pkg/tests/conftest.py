"""Prints one PASS/FAIL line per acceptance criterion after the run."""

import pytest


@pytest.fixture
def criterion(record_property):
    """``criterion(number, title)`` tags the test; ``criterion.note(text)`` adds a measured value."""

    class Tag:
        def __call__(self, number, title):
            record_property("criterion", number)
            record_property("title", title)
            return self

        def note(self, text):
            record_property("note", text)

    return Tag()


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props or rep.when not in ("call", "setup"):
                continue
            notes = [v for k, v in rep.user_properties if k == "note"]
            num = props["criterion"]
            ok = rep.passed and rows.get(num, (True,))[0]
            if rep.when == "setup" and rep.passed:
                continue
            rows[num] = (ok, props["title"], notes)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(rows):
        ok, title, notes = rows[num]
        detail = f" ({'; '.join(notes)})" if notes else ""
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {title}{detail}")
