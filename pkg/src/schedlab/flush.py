"""Leakage-constrained dispatch: scrub a shared resource between tasks.

A SecurityPolicy names forbidden information flows between tasks; the
FlushFP policy inserts a non-preemptable scrub of F ticks (FLUSH slots)
whenever the next task to run could observe residue left by a forbidden
predecessor.  Residue survives idle time: only a completed scrub clears it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from schedlab.engine import FLUSH, IDLE, SchedulingPolicy
from schedlab.tasks import TaskSet

TOTAL_ORDER = "total_order"
PAIRWISE = "pairwise"


@dataclass(frozen=True)
class SecurityPolicy:
    """Security levels plus the forbidden-flow relation.

    In total_order mode a flow from a higher level to a strictly lower one
    is forbidden (levels come from each task's security_level).  In
    pairwise mode the explicit pairs (src, dst) are forbidden.  flush_cost
    is the scrub length F in ticks; F = 0 models a free scrub, i.e. every
    dispatch boundary is implicitly clean and no FLUSH slots appear.
    """

    mode: str = TOTAL_ORDER
    flush_cost: int = 1
    pairs: frozenset = frozenset()  # only read in pairwise mode

    def __post_init__(self):
        if self.mode not in (TOTAL_ORDER, PAIRWISE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.flush_cost < 0:
            raise ValueError("flush cost must be >= 0")
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        for src, dst in self.pairs:
            if src == dst:
                raise ValueError(f"forbidden flow ({src}, {dst}) names one task twice")

    def has_constraints(self) -> bool:
        return self.mode == TOTAL_ORDER or bool(self.pairs)


def needs_flush(policy: SecurityPolicy, ts: TaskSet, src_id: int, dst_id: int) -> bool:
    """True when running dst after src requires a scrub in between."""
    if src_id == dst_id:
        return False
    if policy.mode == PAIRWISE:
        return (src_id, dst_id) in policy.pairs
    return ts.by_id(src_id).security_level > ts.by_id(dst_id).security_level


def as_pairwise(policy: SecurityPolicy, ts: TaskSet) -> SecurityPolicy:
    """Compile a total-order policy into the equivalent explicit pair set."""
    if policy.mode == PAIRWISE:
        return policy
    pairs = frozenset(
        (a.id, b.id)
        for a in ts
        for b in ts
        if a.id != b.id and a.security_level > b.security_level
    )
    return SecurityPolicy(mode=PAIRWISE, flush_cost=policy.flush_cost, pairs=pairs)


class FlushFP(SchedulingPolicy):
    """Preemptive fixed-priority dispatch with scheduler-inserted scrubs.

    Residue is tracked as the set of tasks that executed since the last
    completed scrub.  Before dispatching the highest-priority ready job,
    any forbidden residue forces a scrub of flush_cost consecutive FLUSH
    slots; the scrub is non-preemptable, and arrivals during it simply
    wait.  Idle never clears residue.
    """

    name = "flush"

    def __init__(self, policy: SecurityPolicy):
        self.policy = policy
        self.taint: set[int] = set()
        self._flush_left = 0
        self._clear_pending = False

    def attach(self, ts, ctx):
        self.ts = ts
        self.taint = set()
        self._flush_left = 0
        self._clear_pending = False

    def pick(self, tick, ready, ctx):
        if self._clear_pending:
            self.taint.clear()
            self._clear_pending = False
        if self._flush_left > 0:
            self._flush_left -= 1
            if self._flush_left == 0:
                self._clear_pending = True
            return FLUSH
        if not ready:
            return IDLE  # residue deliberately survives idle time
        job = ready[0]
        dirty = any(
            needs_flush(self.policy, self.ts, src, job.task_id) for src in self.taint
        )
        if dirty:
            if self.policy.flush_cost == 0:
                self.taint.clear()  # free scrub: clean instantly, no slot spent
            else:
                self._flush_left = self.policy.flush_cost - 1
                if self._flush_left == 0:
                    self._clear_pending = True
                return FLUSH
        self.taint.add(job.task_id)
        return job


def count_violations(trace, ts: TaskSet, policy: SecurityPolicy) -> int:
    """Count dispatch boundaries where a task began running over forbidden residue.

    Residue is re-derived from the raw slots alone: the tasks executed
    since the last FLUSH run of length >= flush_cost (shorter runs are
    partial scrubs and clear nothing).  Each contiguous execution run of a
    task is one exposure, counted once at its first tick.  With
    flush_cost = 0 scrubbing is free and implicit, so no trace violates.
    """
    f = policy.flush_cost
    if f == 0:
        return 0
    violations = 0
    taint: set[int] = set()
    run = 0  # length of the FLUSH run ending at the previous tick
    prev = IDLE
    for occ in trace.slots:
        if occ == FLUSH:
            run += 1
            if run >= f:
                taint.clear()
                run = 0
            prev = FLUSH
            continue
        run = 0
        if occ == IDLE:
            prev = IDLE
            continue
        entering = occ != prev
        if entering and any(needs_flush(policy, ts, src, occ) for src in taint):
            violations += 1
        taint.add(occ)
        prev = occ
    return violations
