"""Collects acceptance outcomes and prints one line per criterion at the end."""

from collections import OrderedDict

import pytest

_RESULTS: "OrderedDict[str, list[tuple[str, bool, str]]]" = OrderedDict()

CRITERIA = OrderedDict([
    ("1", "zero-noise identity"),
    ("2", "quadratic special cases"),
    ("3", "one-knob oracle equivalence"),
    ("4", "reduction to X"),
    ("5", "Raman closed form"),
    ("6", "correlated MC leading order"),
    ("7", "measurement identities"),
    ("8", "determinism"),
])


class Recorder:
    def __call__(self, criterion: str, case: str, passed: bool, detail: str = ""):
        _RESULTS.setdefault(criterion, []).append((case, bool(passed), detail))
        return passed


@pytest.fixture
def record():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, title in CRITERIA.items():
        cases = _RESULTS.get(key)
        if not cases:
            tr.write_line(f"criterion {key} ({title}): NOT RUN")
            continue
        for case, passed, detail in cases:
            tr.write_line(f"    {key}/{case}: {'pass' if passed else 'FAIL'}  {detail}")
        ok = all(passed for _, passed, _ in cases)
        tr.write_line(f"criterion {key} ({title}): {'PASS' if ok else 'FAIL'}")
