"""Independent reference implementations used only as test oracles.

Everything in here is written for obviousness, not speed, and must stay
decoupled from the package under test: no imports from schedlab.  The
reference simulator is a straight transcription of preemptive fixed-priority
dispatching over integer ticks; tests freeze its outputs as expected values.
"""

IDLE = -1


def ref_fp_slots(tasks, duration):
    """Simulate preemptive fixed-priority dispatch, one tick at a time.

    tasks: list of dicts with keys C, T, priority, and optional phase, D.
    Lower priority number wins the processor.  Returns a list of length
    `duration` whose entries are the running task's index in `tasks`, or
    IDLE.  Ties cannot occur (priorities must be distinct).
    """
    n = len(tasks)
    prios = [t["priority"] for t in tasks]
    assert len(set(prios)) == n
    # pending[i] holds [remaining, release] per unfinished job, oldest first
    pending = [[] for _ in range(n)]
    slots = []
    for tick in range(duration):
        for i, t in enumerate(tasks):
            phase = t.get("phase", 0)
            if tick >= phase and (tick - phase) % t["T"] == 0:
                pending[i].append([t["C"], tick])
        ready = [i for i in range(n) if pending[i]]
        if not ready:
            slots.append(IDLE)
            continue
        run = min(ready, key=lambda i: prios[i])
        slots.append(run)
        pending[run][0][0] -= 1
        if pending[run][0][0] == 0:
            pending[run].pop(0)
    return slots


def ref_fp_responses(tasks, duration):
    """Worst observed response time per task over `duration` ticks.

    Jobs released but not finished inside the window are ignored, so pick
    the window large enough (a hyperperiod past the longest deadline is
    plenty for synchronous release).  Returns a list of ints or None for
    tasks that never completed a job.
    """
    n = len(tasks)
    prios = [t["priority"] for t in tasks]
    pending = [[] for _ in range(n)]
    worst = [None] * n
    for tick in range(duration):
        for i, t in enumerate(tasks):
            phase = t.get("phase", 0)
            if tick >= phase and (tick - phase) % t["T"] == 0:
                pending[i].append([t["C"], tick])
        ready = [i for i in range(n) if pending[i]]
        if not ready:
            continue
        run = min(ready, key=lambda i: prios[i])
        job = pending[run][0]
        job[0] -= 1
        if job[0] == 0:
            resp = tick + 1 - job[1]
            if worst[run] is None or resp > worst[run]:
                worst[run] = resp
            pending[run].pop(0)
    return worst


def ref_busy_intervals(slots):
    """Maximal runs of non-idle slots as (begin, end) half-open pairs."""
    out = []
    begin = None
    for tick, occ in enumerate(slots):
        if occ != IDLE and begin is None:
            begin = tick
        elif occ == IDLE and begin is not None:
            out.append((begin, tick))
            begin = None
    if begin is not None:
        out.append((begin, len(slots)))
    return out


def ref_rm_priorities(tasks):
    """Rate-monotonic priority assignment: shorter period first, id breaks ties."""
    order = sorted(range(len(tasks)), key=lambda i: (tasks[i]["T"], tasks[i].get("id", i)))
    prios = [0] * len(tasks)
    for rank, i in enumerate(order):
        prios[i] = rank + 1
    return prios
