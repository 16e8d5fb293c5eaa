"""Acceptance-criteria registry: one summary line per criterion at the end.

Each acceptance test wraps its body in `acceptance.criterion(...)`; the
terminal summary then prints PASS/FAIL per criterion, and criteria whose
test never finished (crashed, deselected, interrupted) show up as
'did not complete' instead of silently disappearing.
"""

from contextlib import contextmanager

import pytest

CRITERIA = (
    ("C1", "analysis soundness sweep"),
    ("C2", "offset inference fidelity"),
    ("C3", "shuffle safety and entropy ordering"),
    ("C4", "flush isolation and analysis soundness"),
    ("C5", "restart model cross-validation"),
    ("C6", "cache usage inference"),
    ("C7", "monitor detection and latency"),
    ("C8", "seeded determinism"),
)


class AcceptanceLog:
    def __init__(self):
        self.results = {}
        self.notes = {}
        self.touched = False

    def note(self, cid: str, text: str):
        self.notes[cid] = text

    @contextmanager
    def criterion(self, cid: str):
        self.touched = True
        try:
            yield self
        except BaseException:
            self.results[cid] = False
            raise
        else:
            self.results[cid] = True


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance():
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if not _LOG.touched:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, label in CRITERIA:
        note = _LOG.notes.get(cid, "")
        suffix = f" [{note}]" if note else ""
        if cid not in _LOG.results:
            tr.write_line(f"{cid} {label}: DID NOT COMPLETE{suffix}")
        elif _LOG.results[cid]:
            tr.write_line(f"{cid} {label}: PASS{suffix}")
        else:
            tr.write_line(f"{cid} {label}: FAIL{suffix}")
