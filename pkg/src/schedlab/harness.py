"""Running scenarios end to end and summarizing what happened.

The harness turns a parsed Scenario into policy objects, runs the
requested number of simulations (member i uses seed master + 1000003 * i,
so ensembles are reproducible but decorrelated), and collects analysis,
safety, defense, and attack metrics into one JSON-friendly report.
Reports are plain dicts of sorted-key-stable scalars and lists: dumping
them with sort_keys=True is byte-identical across runs of the same
scenario, which makes regression diffs trivial.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction

from schedlab.analysis import SCHEDULABLE, response_time_analysis, rta_with_flush
from schedlab.engine import (
    FLUSH,
    IDLE,
    NonPreemptiveFP,
    SchedulingPolicy,
    VanillaFP,
    simulate,
)
from schedlab.flush import FlushFP, count_violations
from schedlab.monitor import MonitorPolicy, detection_latencies
from schedlab.phase_inference import Observation, infer_offsets
from schedlab.cache_probe import classify_footprint, probe_rounds
from schedlab.restart import (
    detection_analysis,
    objective,
    optimize_period,
    periodic_analysis,
)
from schedlab.scenario import Scenario
from schedlab.shuffle import ShuffleFP, compute_budgets, schedule_entropy
from schedlab.tasks import PERIODIC, TaskSet, hyperperiod, utilization

SEED_STRIDE = 1_000_003  # spreads ensemble members across seed space


def member_seed(master: int, index: int) -> int:
    return master + SEED_STRIDE * index


def build_policy(sc: Scenario) -> SchedulingPolicy:
    """Fresh policy object for one run of the scenario."""
    if sc.policy == "vanilla":
        return VanillaFP()
    if sc.policy == "nonpreemptive":
        return NonPreemptiveFP()
    if sc.policy == "shuffle":
        cfg = sc.shuffle
        return ShuffleFP(mode=cfg.mode, guard=cfg.guard)
    if sc.policy == "flush":
        return FlushFP(sc.security)
    if sc.policy == "monitor":
        m = sc.monitor
        base = FlushFP(sc.security) if sc.security is not None else VanillaFP()
        return MonitorPolicy(m.scan_task, base=base,
                             fine_priority=m.fine_priority,
                             alert_ticks=m.alerts, escalate=m.escalate)
    raise ValueError(f"unknown policy {sc.policy!r}")


def scenario_duration(sc: Scenario) -> int:
    if sc.duration is not None:
        return sc.duration
    if any(t.kind != PERIODIC for t in sc.taskset):
        raise ValueError(
            "sporadic tasks have no hyperperiod; give an explicit duration"
        )
    return sc.hyperperiods * hyperperiod(sc.taskset)


def _fold_period(ts: TaskSet, duration: int):
    try:
        h = hyperperiod(ts)
    except (ValueError, OverflowError):
        return None
    return h if duration % h == 0 else None


def analyze_scenario(sc: Scenario) -> dict:
    """Static verdict for the scenario's task set under its policy."""
    ts = sc.taskset
    u = utilization(ts)
    if sc.policy == "flush" and sc.security is not None:
        rep = rta_with_flush(ts, sc.security)
    else:
        rep = response_time_analysis(ts)
    return {
        "utilization": float(u),
        "utilization_exact": f"{Fraction(u)}",
        "method": rep.method,
        "verdict": rep.verdict,
        "responses": {
            str(tid): r for tid, r in sorted(rep.per_task_response.items())
        },
    }


def run_scenario(sc: Scenario, runs: int = 1) -> dict:
    """Simulate `runs` ensemble members and report safety plus metrics."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    ts = sc.taskset
    duration = scenario_duration(sc)
    traces = [
        simulate(ts, duration, policy=build_policy(sc),
                 seed=member_seed(sc.seed, i))
        for i in range(runs)
    ]
    run_rows = []
    total_misses = 0
    total_violations = 0
    share_sums = {t.id: 0.0 for t in ts}
    for i, tr in enumerate(traces):
        misses = len(tr.misses)
        total_misses += misses
        row = {"seed": member_seed(sc.seed, i), "misses": misses,
               "preemptions": sum(1 for e in tr.events if e.kind == "preempt"),
               "idle_share": tr.slots.count(IDLE) / duration}
        if sc.policy == "flush":
            v = count_violations(tr, ts, sc.security)
            row["violations"] = v
            row["flush_share"] = tr.slots.count(FLUSH) / duration
            total_violations += v
        run_rows.append(row)
        for t in ts:
            share_sums[t.id] += tr.slots.count(t.id) / duration

    report = {
        "name": sc.name,
        "policy": sc.policy,
        "seed": sc.seed,
        "runs": runs,
        "duration": duration,
        "tasks": [
            {"id": t.id, "C": t.C, "T": t.T, "D": t.D, "phase": t.phase,
             "kind": t.kind, "priority": t.priority,
             "security_level": t.security_level,
             "mean_share": share_sums[t.id] / runs}
            for t in sorted(ts, key=lambda t: t.id)
        ],
        "analysis": analyze_scenario(sc),
        "simulation": {
            "total_misses": total_misses,
            "runs": run_rows,
        },
    }
    if sc.policy == "flush":
        report["simulation"]["total_violations"] = total_violations
        base = [simulate(ts, duration, policy=VanillaFP(),
                         seed=member_seed(sc.seed, i)) for i in range(runs)]
        report["simulation"]["unprotected_violations"] = sum(
            count_violations(b, ts, sc.security) for b in base
        )

    fold = _fold_period(ts, duration)
    folds = duration // fold if fold else 1
    if runs * folds >= 2:
        _, mean = schedule_entropy(traces, hyperperiod=fold)
        report["entropy"] = {
            "mean_bits": mean,
            "fold": fold if fold else duration,
            "samples_per_offset": runs * folds,
        }
    else:
        report["entropy"] = None

    if sc.policy == "shuffle" and sc.shuffle.guard == "budget":
        budgets = compute_budgets(ts)
        report["shuffle"] = {
            "budgets": {str(k): v for k, v in sorted(budgets.per_task.items())},
            "completion_bounds": {
                str(k): v for k, v in sorted(budgets.completion_bounds.items())
            },
        }
    if sc.policy == "monitor":
        lat_rows = []
        for tr in traces:
            lats = detection_latencies(tr, sc.monitor.scan_task,
                                       sc.monitor.alerts)
            lat_rows.append([l if l is not None else None for l in lats])
        switches = [
            sum(1 for e in tr.events if e.kind == "mode_switch")
            for tr in traces
        ]
        report["monitor"] = {
            "alerts": list(sc.monitor.alerts),
            "latencies": lat_rows,
            "mode_switches": switches,
        }
    if sc.restart is not None:
        r = sc.restart
        if r.detection_rate is None:
            rep = periodic_analysis(r.period, r.reboot, r.compromise_rate)
        else:
            rep = detection_analysis(r.period, r.reboot, r.compromise_rate,
                                     r.detection_rate)
        report["restart"] = {
            "period": rep.period,
            "unavailability": rep.unavailability,
            "compromised_fraction": rep.compromised_fraction,
            "objective": objective(rep, r.weight),
            "weight": r.weight,
        }
    return report


def run_attack(sc: Scenario, window: int | None = None) -> dict:
    """Attack the scenario's (possibly defended) system and report success.

    Offset inference always runs; a [cache] section adds aligned
    prime/probe rounds against its victim task.
    """
    ts = sc.taskset
    duration = window if window is not None else scenario_duration(sc)
    victim_trace = simulate(ts, duration, policy=build_policy(sc),
                            seed=sc.seed)
    obs = Observation.from_trace(victim_trace)
    result = infer_offsets(ts, obs)
    truth = tuple(t.phase for t in sorted(ts, key=lambda t: t.id))
    report = {
        "window": duration,
        "observed_busy_intervals": len(obs.busy),
        "offsets": {
            "status": result.status,
            "candidates": len(result.candidates),
            "truth_recovered": truth in result.candidates,
            "exact": result.status == "exact"
            and result.candidates == (truth,),
            "low_confidence": result.low_confidence,
        },
    }
    if sc.cache is not None:
        c = sc.cache
        counts = [c.profiles[i % len(c.profiles)]
                  for i in range(sum(1 for j in victim_trace.jobs
                                     if j.task_id == c.victim))]
        rounds = probe_rounds(victim_trace, c.victim, counts,
                              num_lines=c.lines, epsilon=c.epsilon,
                              seed=sc.seed)
        labels = [classify_footprint(r.observed, c.profiles, r.primed,
                                     c.epsilon) for r in rounds]
        correct = sum(a == b for a, b in zip(labels, counts))
        report["cache"] = {
            "victim": c.victim,
            "rounds": len(rounds),
            "epsilon": c.epsilon,
            "accuracy": correct / len(rounds) if rounds else None,
        }
    return report


SWEEP_KEYS = ("security.flush_cost", "restart.period")


def sweep(sc: Scenario, key: str, values) -> dict:
    """Re-evaluate one scalar knob over a range of values."""
    values = list(values)
    if not values:
        raise ValueError("empty sweep range")
    if key == "security.flush_cost":
        if sc.security is None:
            raise ValueError("scenario has no [security] section to sweep")
        rows = []
        for v in values:
            if v < 0:
                raise ValueError("flush_cost must be >= 0")
            policy = dataclasses.replace(sc.security, flush_cost=v)
            rep = rta_with_flush(sc.taskset, policy)
            rows.append({
                "flush_cost": v,
                "verdict": rep.verdict,
                "responses": {
                    str(tid): r
                    for tid, r in sorted(rep.per_task_response.items())
                },
            })
        return {"key": key, "rows": rows}
    if key == "restart.period":
        if sc.restart is None:
            raise ValueError("scenario has no [restart] section to sweep")
        r = sc.restart
        result = optimize_period(values, r.reboot, r.compromise_rate,
                                 weight=r.weight,
                                 detection_rate=r.detection_rate)
        rows = [
            {"period": p.period, "objective": p.objective,
             "unavailability": p.report.unavailability,
             "compromised_fraction": p.report.compromised_fraction}
            for p in result.curve
        ]
        return {"key": key, "rows": rows,
                "best": {"period": result.best.period,
                         "objective": result.best.objective}}
    raise ValueError(f"unsupported sweep key {key!r}; try one of {SWEEP_KEYS}")
