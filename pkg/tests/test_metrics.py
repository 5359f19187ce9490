"""Benchmark report aggregation and the normalized-entropy report."""

import random

import pytest

from inquest.core import (
    Answer,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    EnvironmentSpec,
    EpisodeRecord,
    Guess,
    SessionConfig,
    append_turn,
)
from inquest.environments import guess_who_dataset
from inquest.errors import EmptyBatch, MixedTaskKinds
from inquest.metrics import compute_report, ne_report


def make_episode(kind="guess_who", success=True, turns=3, seed=0, final_rank=None, t_max=16):
    config = SessionConfig(environment=_spec(kind), t_max=t_max, seed=seed)
    history = DialogueHistory()
    for i in range(turns):
        history = append_turn(history, Guess(f"g{i}"), Answer.NO)
    rank_trace = None
    if final_rank is not None:
        rank_trace = tuple([50] * turns + [final_rank])
    return EpisodeRecord(
        config=config,
        target_id="T",
        turns=history,
        step_scores=tuple(0.5 for _ in range(turns)),
        success=success,
        turn_count=turns,
        trajectory_reward=1.0 if success else -config.rewards.kappa,
        seed=seed,
        rank_trace=rank_trace,
    )


def _spec(kind):
    if kind == "guess_number":
        return EnvironmentSpec(kind=kind, window_start=86)
    if kind == "image":
        return EnvironmentSpec(kind=kind, store_path="s", annotations_path="a")
    return EnvironmentSpec(kind=kind)


def test_report_sr_and_mt():
    episodes = [
        make_episode(success=True, turns=5),
        make_episode(success=True, turns=7),
        make_episode(success=False, turns=9, t_max=16),
    ]
    report = compute_report(episodes)
    assert report.sr == pytest.approx(2 / 3, abs=1e-3)
    # failures count T_max turns: (5 + 7 + 16) / 3
    assert report.mt == pytest.approx(9.333, abs=1e-3)


def test_report_all_success_turn_one():
    episodes = [make_episode(success=True, turns=1) for _ in range(4)]
    report = compute_report(episodes)
    assert report.sr == 1.0
    assert report.mt == 1.0


def test_report_all_failures_mt_is_t_max():
    episodes = [make_episode(success=False, turns=3, t_max=16) for _ in range(5)]
    assert compute_report(episodes).mt == 16.0


def test_report_median_rank_even_count():
    episodes = [
        make_episode(kind="image", success=True, turns=2, final_rank=r) for r in (3, 4, 5, 6)
    ]
    report = compute_report(episodes)
    assert report.medr == 4.5
    assert report.mr == 4.5
    assert report.recall_at[5] == 0.75


def test_report_recall_monotone_in_k():
    rng = random.Random(0)
    episodes = [
        make_episode(kind="image", success=True, turns=2, final_rank=rng.randint(1, 40))
        for _ in range(30)
    ]
    report = compute_report(episodes, ks=(1, 3, 5, 10, 20, 40))
    values = [report.recall_at[k] for k in (1, 3, 5, 10, 20, 40)]
    assert values == sorted(values)
    assert values[-1] == 1.0


def test_report_permutation_invariant():
    episodes = [make_episode(success=bool(i % 2), turns=i + 1) for i in range(6)]
    forward = compute_report(episodes)
    rng = random.Random(1)
    shuffled = episodes[:]
    rng.shuffle(shuffled)
    backward = compute_report(shuffled)
    assert forward.sr == backward.sr
    assert forward.mt == backward.mt


def test_report_rejects_empty_and_mixed():
    with pytest.raises(EmptyBatch):
        compute_report([])
    with pytest.raises(MixedTaskKinds):
        compute_report([make_episode("guess_who"), make_episode("guess_number")])


def test_ne_report_embedded_table():
    schema, characters = guess_who_dataset()
    report = ne_report(characters, schema)
    assert report["has_beard"] == pytest.approx(0.9183, abs=1e-4)
    assert report["gender"] == pytest.approx(1.0, abs=1e-12)
    assert report["hobby"] == pytest.approx(1.0, abs=1e-12)


def test_ne_report_single_candidate_all_zero():
    schema, characters = guess_who_dataset()
    report = ne_report(characters[:1], schema)
    assert all(v == 0.0 for v in report.values())


def test_ne_report_two_opposite_candidates():
    schema = AttributeSchema((("a", ("yes", "no")), ("b", ("yes", "no"))))
    pair = (
        Candidate(id="x", attributes={"a": "yes", "b": "no"}),
        Candidate(id="y", attributes={"a": "no", "b": "yes"}),
    )
    report = ne_report(pair, schema)
    assert report == {"a": pytest.approx(1.0), "b": pytest.approx(1.0)}
