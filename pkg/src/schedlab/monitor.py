"""Behavioral monitoring: watchdog rules, learned activity profiles, and a
scan policy that escalates its own sampling rate on suspicion.

Three layers, loosely coupled:

* Hard watchdog rules compare a trace against the declared task
  parameters: a job must not execute more ticks than its cost, and
  releases of one task must not arrive closer than its period (minus a
  configurable tolerance).  Violations are definite, not statistical.
* A learned profile models per-window task activity shares.  Training
  vectors are clustered with incrementally seeded k-means (each new
  centroid is the training point that most reduces the current squared
  error, then Lloyd refinement), scored by Mahalanobis distance under a
  pooled ridge-regularized covariance, and thresholded at a high quantile
  of the training scores.  Activity shares are nearly collinear (they sum
  to at most 1), hence the ridge.
* MonitorPolicy runs a scan task it manages itself on top of a wrapped
  dispatch policy.  Normally scans run at a passive priority and period;
  an alert escalates them to a reserved high priority and half the
  period until one escalated scan completes.  Both placements must pass
  response-time analysis up front, so the monitor can never be the cause
  of a deadline miss.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from schedlab.analysis import SCHEDULABLE, response_time_analysis
from schedlab.engine import SchedulingPolicy, VanillaFP
from schedlab.tasks import Task, TaskSet

OVERRUN = "overrun"
EARLY_RELEASE = "early_release"

PASSIVE = "passive"
FINE = "fine"


@dataclass(frozen=True)
class Anomaly:
    kind: str
    task_id: int
    job_id: int
    tick: int
    detail: str


def watchdog_check(trace, ts: TaskSet, tolerance: int = 0) -> list:
    """Definite rule violations of trace against the declared parameters."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    by_id = {t.id: t for t in ts}
    anomalies = []
    executed: dict[int, int] = {}
    for slot_job in trace.slot_jobs:
        if slot_job >= 0:
            executed[slot_job] = executed.get(slot_job, 0) + 1
    jobs_by_id = {j.job_id: j for j in trace.jobs}
    for job_id, ticks in sorted(executed.items()):
        job = jobs_by_id[job_id]
        task = by_id.get(job.task_id)
        if task is None:
            continue  # jobs of undeclared tasks are the spawner's business
        if ticks > task.C + tolerance:
            anomalies.append(Anomaly(
                kind=OVERRUN, task_id=job.task_id, job_id=job_id,
                tick=job.release,
                detail=f"executed {ticks} ticks, declared cost {task.C}",
            ))
    releases: dict[int, list] = {}
    for job in trace.jobs:
        releases.setdefault(job.task_id, []).append(job.release)
    for task_id, rel in sorted(releases.items()):
        task = by_id.get(task_id)
        if task is None:
            continue
        rel.sort()
        for a, b in zip(rel, rel[1:]):
            if b - a < task.T - tolerance:
                anomalies.append(Anomaly(
                    kind=EARLY_RELEASE, task_id=task_id, job_id=-1, tick=b,
                    detail=f"gap {b - a} below period {task.T}",
                ))
    return anomalies


# --- learned activity profile -------------------------------------------------

def activity_features(trace, ts: TaskSet, window: int) -> np.ndarray:
    """Per-window share of processor time for each task (ascending id).

    Trailing slots that do not fill a whole window are dropped.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if window > trace.duration:
        raise ValueError("window longer than the trace")
    ids = sorted(t.id for t in ts)
    col = {tid: i for i, tid in enumerate(ids)}
    windows = trace.duration // window
    out = np.zeros((windows, len(ids)))
    for w in range(windows):
        for tick in range(w * window, (w + 1) * window):
            occ = trace.slots[tick]
            if occ in col:
                out[w, col[occ]] += 1
    return out / window


@dataclass
class ActivityProfile:
    centroids: np.ndarray
    cov_inv: np.ndarray
    threshold: float
    sse: float
    quantile: float
    ridge: float

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _lloyd(x: np.ndarray, centroids: np.ndarray):
    for _ in range(100):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new = centroids.copy()
        for c in range(centroids.shape[0]):
            members = x[assign == c]
            if len(members):
                new[c] = members.mean(axis=0)
        if np.allclose(new, centroids):
            break
        centroids = new
    d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    return centroids, assign, float(d2.min(axis=1).sum())


def fit_profile(vectors, k: int, ridge: float = 1e-6,
                quantile: float = 0.99) -> ActivityProfile:
    """Cluster training vectors and calibrate an anomaly threshold.

    Seeding is incremental and deterministic: start from the global mean;
    each further centroid is the training point with the largest total
    squared-error reduction, followed by Lloyd refinement.  The final
    squared error therefore never increases when k grows.  Requires at
    least k * d training vectors and at least k distinct ones.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2:
        raise ValueError("training vectors must be a 2-d array")
    n, d = x.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k * d:
        raise ValueError(f"need at least k*d = {k * d} vectors, got {n}")
    if len(np.unique(x, axis=0)) < k:
        raise ValueError("fewer distinct vectors than clusters; degenerate")
    if not 0.0 < quantile <= 1.0:
        raise ValueError("quantile must be in (0, 1]")
    centroids = x.mean(axis=0, keepdims=True)
    centroids, assign, sse = _lloyd(x, centroids)
    for _ in range(1, k):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        near = d2.min(axis=1)
        cand_d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        gains = np.maximum(near[:, None] - cand_d2, 0.0).sum(axis=0)
        best = int(gains.argmax())
        centroids = np.vstack([centroids, x[best]])
        centroids, assign, sse = _lloyd(x, centroids)
    resid = x - centroids[assign]
    cov = resid.T @ resid / n + ridge * np.eye(d)
    cov_inv = np.linalg.inv(cov)
    prof = ActivityProfile(centroids=centroids, cov_inv=cov_inv,
                           threshold=0.0, sse=sse, quantile=quantile,
                           ridge=ridge)
    scores = score_vectors(prof, x)
    prof.threshold = float(np.quantile(scores, quantile))
    return prof


def score_vectors(profile: ActivityProfile, vectors) -> np.ndarray:
    """Mahalanobis distance to the nearest centroid, one score per row."""
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.shape[1] != profile.centroids.shape[1]:
        raise ValueError(
            f"expected {profile.centroids.shape[1]} features, got {x.shape[1]}"
        )
    best = np.full(x.shape[0], np.inf)
    for c in profile.centroids:
        delta = x - c
        m = np.einsum("ij,jk,ik->i", delta, profile.cov_inv, delta)
        best = np.minimum(best, m)
    return np.sqrt(best)


def flag_anomalies(profile: ActivityProfile, vectors) -> np.ndarray:
    return score_vectors(profile, vectors) > profile.threshold


# --- escalating scan policy -----------------------------------------------------

@dataclass
class _ScanState:
    mode: str = PASSIVE
    last_release: int | None = None
    alerts: tuple = ()
    alert_idx: int = 0
    active_alert: int | None = None


class MonitorPolicy(SchedulingPolicy):
    """Self-scheduled security scans over a wrapped dispatch policy.

    The scan task must be in the task set; this policy manages its
    releases instead of the engine.  Passive mode releases it at its
    declared period and priority; an alert tick escalates to
    fine_priority and half the period (at least 1) until one escalated
    scan finishes, then drops back.  Mode changes emit mode_switch
    events.
    """

    name = "monitor"

    def __init__(self, scan_task_id: int, base: SchedulingPolicy | None = None,
                 fine_priority: int = 0, alert_ticks=(), escalate: bool = True):
        self.scan_task_id = scan_task_id
        self.base = base if base is not None else VanillaFP()
        self.fine_priority = fine_priority
        self.alert_ticks = tuple(sorted(alert_ticks))
        self.escalate = escalate
        self.name = f"monitor({self.base.name})"

    def managed_task_ids(self):
        return {self.scan_task_id} | self.base.managed_task_ids()

    def attach(self, ts: TaskSet, ctx):
        try:
            scan = ts.by_id(self.scan_task_id)
        except KeyError:
            raise ValueError(
                f"scan task {self.scan_task_id} not in task set"
            ) from None
        others = [t for t in ts if t.id != scan.id]
        if any(t.priority == self.fine_priority for t in others):
            raise ValueError(
                f"fine priority {self.fine_priority} collides with task set"
            )
        fine_period = max(1, scan.T // 2)
        fine_scan = dataclasses.replace(
            scan, T=fine_period, D=fine_period, priority=self.fine_priority,
            phase=0,
        )
        for label, variant in (("passive", ts),
                               ("fine", TaskSet(tasks=(*others, fine_scan)))):
            if response_time_analysis(variant).verdict != SCHEDULABLE:
                raise ValueError(
                    f"scan task unschedulable in {label} placement; "
                    "monitoring refused"
                )
        self._scan = scan
        self._fine_period = fine_period
        self._state = _ScanState(alerts=self.alert_ticks)
        self.base.attach(ts, ctx)

    def _period(self) -> int:
        return self._fine_period if self._state.mode == FINE else self._scan.T

    def _priority(self) -> int:
        if self._state.mode == FINE:
            return self.fine_priority
        return self._scan.priority

    def pick(self, tick, ready, ctx):
        st = self._state
        done = ctx.completed
        if (st.mode == FINE and done is not None
                and done.task_id == self.scan_task_id
                and done.priority == self.fine_priority):
            st.mode = PASSIVE
            st.active_alert = None
            ctx.emit("mode_switch", self.scan_task_id)
        if (self.escalate and st.mode == PASSIVE
                and st.alert_idx < len(st.alerts)
                and st.alerts[st.alert_idx] <= tick):
            st.alert_idx += 1
            st.mode = FINE
            st.active_alert = tick
            ctx.emit("mode_switch", self.scan_task_id)
        due = (st.last_release is None and tick >= self._scan.phase) or (
            st.last_release is not None
            and tick >= st.last_release + self._period()
        )
        if due:
            period = self._period()
            ctx.spawn(self.scan_task_id, demand=self._scan.C,
                      deadline=tick + period, priority=self._priority())
            st.last_release = tick
        return self.base.pick(tick, ready, ctx)


def detection_latencies(trace, scan_task_id: int, alert_ticks) -> list:
    """Per alert: ticks until the first scan released at or after it
    completes; None if no such scan finishes inside the trace."""
    finishes = sorted(
        (j.release, j.completion)
        for j in trace.jobs
        if j.task_id == scan_task_id and j.completion is not None
    )
    out = []
    for alert in alert_ticks:
        after = [c for r, c in finishes if r >= alert]
        out.append(min(after) - alert if after else None)
    return out
