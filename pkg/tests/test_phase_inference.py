"""Offset-inference attack: observation capture, pruned search, oracle parity."""

import pytest

from schedlab import Task, TaskSet, generate_taskset, hyperperiod
from schedlab.phase_inference import (
    AMBIGUOUS,
    EXACT,
    FAILED,
    InferenceResult,
    Observation,
    brute_force_offsets,
    infer_offsets,
    observe,
)


def single(C=2, T=5, phase=0):
    return TaskSet(tasks=(Task(id=1, C=C, T=T, phase=phase, priority=1),))


def flagship(phases=(0, 0, 0)):
    return TaskSet(tasks=(
        Task(id=1, C=1, T=4, phase=phases[0], priority=1),
        Task(id=2, C=2, T=6, phase=phases[1], priority=2),
        Task(id=3, C=3, T=12, phase=phases[2], priority=3),
    ))


# --- observation capture ---------------------------------------------------

def test_observe_offset_task_frozen():
    # (C=2, T=5) released at 3: bursts at 3, 8, 13 over a 15-tick window.
    obs = observe(single(phase=3), 15)
    assert obs.busy == ((3, 5), (8, 10), (13, 15))
    assert obs.window == 15


def test_observe_far_offset_is_all_idle():
    obs = observe(single(phase=50), 10)
    assert obs.busy == ()


def test_observation_mask():
    obs = Observation(window=6, busy=((1, 3), (5, 6)))
    assert obs.mask() == 0b100110


def test_observation_validation():
    with pytest.raises(ValueError, match="outside"):
        Observation(window=4, busy=((2, 6),))
    with pytest.raises(ValueError, match="sorted"):
        Observation(window=10, busy=((4, 6), (0, 2)))


# --- inference on hand-checkable cases -------------------------------------

def test_single_task_offset_recovered_exactly():
    result = infer_offsets(single(), observe(single(phase=3), 15))
    assert result.candidates == ((3,),)
    assert result.status == EXACT
    assert result.low_confidence is False
    assert result.as_dicts() == ({1: 3},)


def test_attacker_side_offsets_are_ignored():
    knowledge = single(phase=999)  # stale guess must not leak into the search
    result = infer_offsets(knowledge, observe(single(phase=3), 15))
    assert result.candidates == ((3,),)


def test_identical_pair_is_ambiguous_by_label_swap():
    ts = TaskSet(tasks=(
        Task(id=1, C=2, T=10, phase=0, priority=1),
        Task(id=2, C=2, T=10, phase=5, priority=2),
    ))
    result = infer_offsets(ts, observe(ts, 20))
    assert result.status == AMBIGUOUS
    assert (0, 5) in result.candidates and (5, 0) in result.candidates


def test_truth_is_always_among_candidates():
    truth = (1, 0, 2)
    ts = flagship(truth)
    result = infer_offsets(ts, observe(ts, 2 * hyperperiod(ts)))
    assert truth in result.candidates
    assert result.status in (EXACT, AMBIGUOUS)


def test_inconsistent_observation_fails():
    # 15 solid busy ticks cannot come from a task that can execute at most
    # 6 of them.
    result = infer_offsets(single(), Observation(window=15, busy=((0, 15),)))
    assert result.status == FAILED
    assert result.candidates == ()


def test_window_extension_never_adds_candidates():
    ts = flagship((1, 0, 2))
    h = hyperperiod(ts)
    wide = set(infer_offsets(ts, observe(ts, 2 * h)).candidates)
    narrow = set(infer_offsets(ts, observe(ts, h)).candidates)
    assert wide <= narrow


def test_short_window_refused():
    with pytest.raises(ValueError, match="longest period"):
        infer_offsets(single(), Observation(window=4, busy=((0, 2),)))


def test_sporadic_tasks_refused():
    ts = TaskSet(tasks=(Task(id=1, C=2, T=5, priority=1, kind="sporadic"),))
    with pytest.raises(ValueError, match="sporadic"):
        infer_offsets(ts, Observation(window=10, busy=()))
    with pytest.raises(ValueError, match="sporadic"):
        brute_force_offsets(ts, Observation(window=10, busy=()))


def test_low_confidence_below_hyperperiod():
    ts = TaskSet(tasks=(
        Task(id=1, C=1, T=5, phase=0, priority=1),
        Task(id=2, C=1, T=7, phase=0, priority=2),
    ))
    assert infer_offsets(ts, observe(ts, 7)).low_confidence is True
    assert infer_offsets(ts, observe(ts, 35)).low_confidence is False


# --- brute-force reference and parity --------------------------------------

def test_brute_force_cap():
    ts = TaskSet(tasks=(
        Task(id=1, C=1, T=100, priority=1),
        Task(id=2, C=1, T=100, priority=2),
        Task(id=3, C=1, T=100, priority=3),
    ))
    with pytest.raises(ValueError, match="exceeds cap"):
        brute_force_offsets(ts, Observation(window=100, busy=()), cap=1000)


def test_brute_force_empty_window_matches_everything():
    hits = brute_force_offsets(single(), Observation(window=0, busy=()), cap=10)
    assert hits == tuple((p,) for p in range(5))


def test_brute_force_single_task():
    hits = brute_force_offsets(single(), observe(single(phase=3), 15))
    assert hits == ((3,),)


@pytest.mark.parametrize("seed", range(12))
def test_pruned_search_equals_brute_force(seed):
    import random

    rng = random.Random(seed)
    ts = generate_taskset(
        n=3, target_u=0.5, period_choices=[4, 5, 6, 8], seed=seed, tol=0.05
    )
    truth = TaskSet(tasks=tuple(
        Task(id=t.id, C=t.C, T=t.T, phase=rng.randrange(t.T), priority=t.priority)
        for t in ts
    ))
    obs = observe(truth, hyperperiod(ts))
    result = infer_offsets(ts, obs)
    brute = brute_force_offsets(ts, obs)
    assert result.candidates == brute
    assert tuple(t.phase for t in sorted(truth, key=lambda t: t.id)) in brute


def test_result_is_deterministic():
    ts = flagship((1, 0, 2))
    obs = observe(ts, hyperperiod(ts))
    a = infer_offsets(ts, obs)
    b = infer_offsets(ts, obs)
    assert a == b
    assert isinstance(a, InferenceResult)
