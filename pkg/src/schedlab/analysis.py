"""Offline schedulability tests: utilization bound, RTA, and RTA variants.

All tests are sufficient-side conservative: a "schedulable" verdict must
never be contradicted by the matching simulator configuration.  Responses
are computed per task as least fixed points over integer ticks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from schedlab.tasks import PERIODIC, TaskSet, require_valid, utilization

SCHEDULABLE = "schedulable"
UNSCHEDULABLE = "unschedulable"
INCONCLUSIVE = "inconclusive"

# Fixed-point iteration cap; pathological inputs give up as inconclusive.
MAX_ITERATIONS = 10**6


@dataclass(frozen=True)
class AnalysisReport:
    verdict: str
    method: str
    per_task_response: dict = field(default_factory=dict)
    bound_value: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "method": self.method,
            "responses": {str(k): v for k, v in self.per_task_response.items()},
            "bound": self.bound_value,
        }


def utilization_bound_test(ts: TaskSet) -> AnalysisReport:
    """Sufficient utilization test U <= n(2^(1/n) - 1).

    Only valid for periodic, implicit-deadline (D = T), rate-monotonic
    workloads; anything else raises because the bound says nothing there.
    Above the bound but at most 1 the verdict is inconclusive.
    """
    require_valid(ts)
    if any(t.kind != PERIODIC for t in ts):
        raise ValueError("utilization bound applies to periodic tasks only")
    if any(t.D != t.T for t in ts):
        raise ValueError("utilization bound requires implicit deadlines (D = T)")
    by_prio = ts.by_priority()
    periods = [t.T for t in by_prio]
    if periods != sorted(periods):
        raise ValueError("utilization bound requires rate-monotonic priorities")
    n = len(ts)
    bound = n * (2 ** (1.0 / n) - 1.0)
    u = utilization(ts)
    if u > 1:
        verdict = UNSCHEDULABLE
    elif float(u) <= bound:
        verdict = SCHEDULABLE
    else:
        verdict = INCONCLUSIVE
    return AnalysisReport(verdict=verdict, method="utilization_bound", bound_value=bound)


def _fixed_point(start: int, step, limit: int):
    """Iterate R <- step(R) from start until stable, R > limit, or cap.

    Returns (value, converged) where converged is False when the cap hit.
    A value above limit is returned as-is so callers can see the overshoot.
    """
    r = start
    for _ in range(MAX_ITERATIONS):
        nxt = step(r)
        if nxt == r:
            return r, True
        if nxt > limit:
            return nxt, True
        r = nxt
    return r, False


def response_time_analysis(ts: TaskSet) -> AnalysisReport:
    """Classic preemptive fixed-priority RTA.

    R_i = C_i + sum over higher-priority j of ceil(R_i / T_j) * C_j,
    iterated from C_i.  Sound for sporadic tasks too (T is the minimum
    inter-arrival).  A task whose iteration exceeds its deadline is
    reported with response None and the verdict turns unschedulable.
    """
    require_valid(ts)
    by_prio = ts.by_priority()
    responses: dict[int, int | None] = {}
    verdict = SCHEDULABLE
    for i, task in enumerate(by_prio):
        higher = by_prio[:i]

        def step(r, task=task, higher=higher):
            return task.C + sum(math.ceil(r / h.T) * h.C for h in higher)

        r, converged = _fixed_point(task.C, step, task.D)
        if not converged:
            responses[task.id] = None
            verdict = INCONCLUSIVE if verdict == SCHEDULABLE else verdict
        elif r > task.D:
            responses[task.id] = None
            verdict = UNSCHEDULABLE
        else:
            responses[task.id] = r
    return AnalysisReport(verdict=verdict, method="rta", per_task_response=responses)


def rta_with_flush(ts: TaskSet, policy) -> AnalysisReport:
    """Conservative RTA under scrub insertion with cost F.

    Every dispatch boundary that could demand a scrub is charged: the
    analyzed task pays one F (its own entry), and each higher-priority job
    pays 2F (its entry plus the re-entry it forces on whoever it preempts).
    With F = 0 or an empty forbidden-flow relation this is exactly plain RTA.
    Soundness, not tightness, is the contract here.
    """
    require_valid(ts)
    f = policy.flush_cost
    if f < 0:
        raise ValueError("flush cost must be >= 0")
    if f == 0 or not policy.has_constraints():
        base = response_time_analysis(ts)
        return AnalysisReport(
            verdict=base.verdict,
            method="rta_flush",
            per_task_response=base.per_task_response,
            bound_value=float(f),
        )
    by_prio = ts.by_priority()
    responses: dict[int, int | None] = {}
    verdict = SCHEDULABLE
    for i, task in enumerate(by_prio):
        higher = by_prio[:i]

        def step(r, task=task, higher=higher):
            return (task.C + f) + sum(math.ceil(r / h.T) * (h.C + 2 * f) for h in higher)

        r, converged = _fixed_point(task.C + f, step, task.D)
        if not converged:
            responses[task.id] = None
            verdict = INCONCLUSIVE if verdict == SCHEDULABLE else verdict
        elif r > task.D:
            responses[task.id] = None
            verdict = UNSCHEDULABLE
        else:
            responses[task.id] = r
    return AnalysisReport(
        verdict=verdict,
        method="rta_flush",
        per_task_response=responses,
        bound_value=float(f),
    )


def blocking_term_nonpreemptive(ts: TaskSet) -> dict[int, int]:
    """B_i = max over lower-priority j of (C_j - 1), 0 for the lowest task.

    The longest a just-dispatched non-preemptable lower job can hold the
    processor once tau_i is ready is its remaining cost minus the tick in
    which tau_i arrived.
    """
    require_valid(ts)
    by_prio = ts.by_priority()
    out: dict[int, int] = {}
    for i, task in enumerate(by_prio):
        lower = by_prio[i + 1:]
        out[task.id] = max((t.C - 1 for t in lower), default=0)
    return out


def rta_nonpreemptive(ts: TaskSet) -> AnalysisReport:
    """RTA for fully non-preemptive fixed-priority dispatch.

    Start-time form: w_i = B_i + sum over higher j of (floor(w_i/T_j)+1)*C_j,
    R_i = w_i + C_i.  Once a job starts it cannot be preempted, so only
    higher-priority jobs released strictly before the start can interfere.
    """
    require_valid(ts)
    blocking = blocking_term_nonpreemptive(ts)
    by_prio = ts.by_priority()
    responses: dict[int, int | None] = {}
    verdict = SCHEDULABLE
    for i, task in enumerate(by_prio):
        higher = by_prio[:i]
        b = blocking[task.id]

        def step(w, higher=higher, b=b):
            return b + sum((w // h.T + 1) * h.C for h in higher)

        limit = task.D - task.C  # start must leave room for the full cost
        w, converged = _fixed_point(b, step, max(limit, 0))
        if not converged:
            responses[task.id] = None
            verdict = INCONCLUSIVE if verdict == SCHEDULABLE else verdict
        elif w + task.C > task.D:
            responses[task.id] = None
            verdict = UNSCHEDULABLE
        else:
            responses[task.id] = w + task.C
    return AnalysisReport(
        verdict=verdict, method="rta_nonpreemptive", per_task_response=responses
    )
