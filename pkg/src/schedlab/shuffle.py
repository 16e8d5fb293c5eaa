"""Schedule randomization with a feasibility guard, plus randomness metrics.

The policy randomizes the dispatch order inside slack the analysis can
prove harmless.  Each task gets a static inversion budget V_i; at runtime
every tick spent under priority inversion (a lower-priority job or the
idle slot running while a job waits) charges one tick against each waiting
higher-priority job's per-job budget, and candidates that would overdraw
anyone's budget are excluded.  The highest-priority ready job never
charges anyone, so a legal candidate always exists.

Budget construction: a vector V is accepted only if every task passes at
least one of two per-task certificates.

* Busy-window certificate: inside a level-i busy window, every inversion
  tick consumes budget from some pending job at level i or above, so the
  window and each job's completion are bounded by the classic multi-job
  busy-window recurrence with each participant's cost inflated to
  C_j + V_j.  Requires the inflated utilization at level i to stay <= 1.
* Release-window certificate: a job of tau_i finishes within
  R = C_i + V_i + sum over higher j of ceil((R + B_j) / T_j) * C_j,
  where B_j is an already-proven completion bound for tau_j (so hp work
  executing inside the window comes only from releases in an interval of
  length R + B_j).  Unlike the busy-window form this tolerates inflated
  utilization above 1, at the price of explicit carry-in accounting.

With V = 0 the busy-window certificate is exactly classic RTA, so every
RTA-schedulable set admits at least the all-zero vector.  Budgets then
grow greedily, one tick at a time in priority order, keeping a vector only
when every task still certifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from schedlab.analysis import SCHEDULABLE, response_time_analysis
from schedlab.engine import IDLE, SchedulingPolicy
from schedlab.tasks import TaskSet

TASK_ONLY = "task_only"
WITH_IDLE = "with_idle"
FINE_GRAINED = "fine_grained"
MODES = (TASK_ONLY, WITH_IDLE, FINE_GRAINED)

GUARD_BUDGET = "budget"
GUARD_NONE = "none"  # unsafe, test-only: shows why the guard exists

_MAX_WINDOW_JOBS = 10_000


@dataclass(frozen=True)
class InversionBudget:
    """Static per-task inversion budgets plus the proven completion bounds."""

    per_task: dict
    completion_bounds: dict

    def fresh(self, task_id: int) -> int:
        return self.per_task[task_id]


def _lfp(start: int, step, limit: int) -> int | None:
    """Least fixed point by iteration from below; None once past limit."""
    r = start
    for _ in range(100_000):
        nxt = step(r)
        if nxt > limit:
            return None
        if nxt == r:
            return r
        r = nxt
    return None


def _cert_busy_window(task, higher, budgets) -> int | None:
    """Inflated multi-job busy-window bound for task, or None if it fails."""
    v_own = budgets[task.id]
    infl = Fraction(task.C + v_own, task.T) + sum(
        Fraction(h.C + budgets[h.id], h.T) for h in higher
    )
    if infl > 1:
        return None  # window may never close; certificate inapplicable
    worst = 0
    for k in range(1, _MAX_WINDOW_JOBS + 1):
        own = k * (task.C + v_own)

        def step(r, own=own):
            return own + sum(
                math.ceil(r / h.T) * (h.C + budgets[h.id]) for h in higher
            )

        limit = (k - 1) * task.T + task.D
        r = _lfp(own, step, limit)
        if r is None:
            return None  # k-th job in the window would miss
        worst = max(worst, r - (k - 1) * task.T)
        if r <= k * task.T:
            return worst  # window closes before the next own release
    return None


def _cert_release_window(task, higher, v_own, bounds) -> int | None:
    """Carry-in-aware single-job bound for task, or None if it fails.

    bounds must hold proven completion bounds for every higher task.
    """
    if any(bounds.get(h.id) is None for h in higher):
        return None

    def step(r):
        return (
            task.C
            + v_own
            + sum(math.ceil((r + bounds[h.id]) / h.T) * h.C for h in higher)
        )

    return _lfp(task.C + v_own, step, task.D)


def _certify(ts: TaskSet, budgets: dict) -> dict | None:
    """Check the whole vector; returns per-task completion bounds or None."""
    by_prio = ts.by_priority()
    bounds: dict[int, int] = {}
    for i, task in enumerate(by_prio):
        higher = by_prio[:i]
        a = _cert_busy_window(task, higher, budgets)
        b = _cert_release_window(task, higher, budgets[task.id], bounds)
        candidates = [x for x in (a, b) if x is not None]
        if not candidates:
            return None
        bounds[task.id] = min(candidates)
    return bounds


def compute_budgets(ts: TaskSet) -> InversionBudget:
    """Largest greedily-reachable safe inversion budgets for ts.

    Starts from the all-zero vector (certified iff classic RTA passes) and
    repeatedly sweeps tasks in priority order, granting one extra tick
    wherever the whole vector still certifies, until a sweep stalls.
    Raises for sets that are not RTA-schedulable: shuffling is refused
    rather than allowed to endanger deadlines.
    """
    if response_time_analysis(ts).verdict != SCHEDULABLE:
        raise ValueError("task set is not RTA-schedulable; shuffling refused")
    budgets = {t.id: 0 for t in ts}
    bounds = _certify(ts, budgets)
    if bounds is None:  # cannot happen for RTA-schedulable sets
        raise AssertionError("zero-budget certificate failed on a schedulable set")
    by_prio = ts.by_priority()
    changed = True
    while changed:
        changed = False
        for task in by_prio:
            if budgets[task.id] >= task.D - task.C:
                continue  # beyond this the job itself cannot fit by its deadline
            budgets[task.id] += 1
            trial = _certify(ts, budgets)
            if trial is None:
                budgets[task.id] -= 1
            else:
                bounds = trial
                changed = True
    return InversionBudget(per_task=budgets, completion_bounds=bounds)


class ShuffleFP(SchedulingPolicy):
    """Randomized fixed-priority dispatch in three granularities.

    task_only re-picks among ready jobs at arrivals and completions;
    with_idle adds the idle slot as a candidate; fine_grained re-picks
    every tick.  A choice other than the highest-priority ready job
    charges the budgets of everyone it delays (idle charges every ready
    job); between decision points the previous choice persists until an
    arrival, a completion, or its legality expiring forces a new pick.
    """

    def __init__(self, mode: str = TASK_ONLY, guard: str = GUARD_BUDGET,
                 budgets: InversionBudget | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if guard not in (GUARD_BUDGET, GUARD_NONE):
            raise ValueError(f"unknown guard {guard!r}")
        self.mode = mode
        self.guard = guard
        self._given = budgets
        self.name = f"shuffle-{mode}"

    def attach(self, ts, ctx):
        if self.guard == GUARD_BUDGET:
            self.budget = self._given if self._given is not None else compute_budgets(ts)
        else:
            self.budget = self._given  # may be None; unguarded mode ignores it
        self.remaining: dict[int, int] = {}
        self.sticky = None

    def _fresh(self, job):
        if self.budget is not None:
            self.remaining[job.job_id] = self.budget.fresh(job.task_id)

    def _enough(self, job) -> bool:
        return self.remaining.get(job.job_id, 0) >= 1

    def _job_legal(self, job, ready) -> bool:
        if self.guard == GUARD_NONE:
            return True
        return all(self._enough(j) for j in ready if j.priority < job.priority)

    def _idle_legal(self, ready) -> bool:
        if self.guard == GUARD_NONE:
            return True
        return all(self._enough(j) for j in ready)

    def pick(self, tick, ready, ctx):
        for job in ctx.arrivals:
            self._fresh(job)
        if ctx.completed is not None:
            self.remaining.pop(ctx.completed.job_id, None)
        if not ready:
            # Forced idle: nobody is waiting, so nobody is charged.
            self.sticky = None
            return IDLE
        decision = (
            self.mode == FINE_GRAINED
            or bool(ctx.arrivals)
            or ctx.completed is not None
            or self.sticky is None
        )
        choice = None
        if not decision:
            s = self.sticky
            if s is IDLE:
                if self._idle_legal(ready):
                    choice = IDLE
            elif s in ready and self._job_legal(s, ready):
                choice = s
        if choice is None:
            candidates = [j for j in ready if self._job_legal(j, ready)]
            if self.mode != TASK_ONLY and self._idle_legal(ready):
                candidates.append(IDLE)
            choice = ctx.rng.choice(candidates)
        if self.budget is not None:
            charged = ready if choice is IDLE else [
                j for j in ready if j.priority < choice.priority
            ]
            for j in charged:
                left = self.remaining.get(j.job_id, 0) - 1
                if self.guard == GUARD_BUDGET and left < 0:
                    raise AssertionError("inversion budget overdrawn")
                self.remaining[j.job_id] = left
        self.sticky = choice
        return choice


def _slot_seq(trace):
    return trace.slots if hasattr(trace, "slots") else list(trace)


def schedule_entropy(traces, hyperperiod: int | None = None):
    """Shannon entropy (bits) of the occupant per tick offset, plus the mean.

    All traces must share one duration.  When `hyperperiod` is given and
    divides the duration, the samples at offset o pool slots o, o + H,
    o + 2H, ... across every trace, so a single long trace measures its
    own hyperperiod-to-hyperperiod variability.  At least two samples per
    offset are required.
    """
    seqs = [_slot_seq(t) for t in traces]
    if not seqs:
        raise ValueError("no traces given")
    duration = len(seqs[0])
    if any(len(s) != duration for s in seqs):
        raise ValueError("traces have mismatched durations")
    h = duration if hyperperiod is None else hyperperiod
    if h <= 0 or duration % h != 0:
        raise ValueError(f"hyperperiod {h} does not divide duration {duration}")
    folds = duration // h
    if folds * len(seqs) < 2:
        raise ValueError("need at least two samples per offset")
    per_offset = []
    for o in range(h):
        counts: dict[int, int] = {}
        for s in seqs:
            for q in range(folds):
                occ = s[o + q * h]
                counts[occ] = counts.get(occ, 0) + 1
        total = folds * len(seqs)
        ent = 0.0
        for c in counts.values():
            p = c / total
            ent -= p * math.log2(p)
        per_offset.append(ent)
    return per_offset, sum(per_offset) / len(per_offset)
