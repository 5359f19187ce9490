"""Oracle selection, numeric templates, replay, and reply parsing."""

import random

import pytest

from inquest.core import (
    Candidate,
    DialogueHistory,
    FreeText,
    Guess,
    KeywordQuery,
    NumericComparison,
    Parity,
)
from inquest.entropy import eig, eig_all
from inquest.environments import guess_who_dataset
from inquest.errors import ExhaustedPool, ExhaustedScript, UnparseableQuestion
from inquest.policies import (
    OracleConfig,
    OraclePolicy,
    ReplayPolicy,
    attribute_question_pool,
    numeric_question_pool,
    oracle_next_question,
    parse_question_text,
)
from inquest.retrievers import tabular_filter
from inquest.environments import truthful_answer


def numbers(lo, hi):
    return tuple(Candidate(id=str(n), number=n) for n in range(lo, hi + 1))


def test_numeric_pool_median_and_templates():
    pool = numeric_question_pool(numbers(1, 100))
    comparisons = [q for q in pool if isinstance(q, NumericComparison)]
    assert {q.threshold for q in comparisons} == {50}
    assert {q.op for q in comparisons} == {"<", "<=", ">", ">="}
    assert sum(1 for q in pool if isinstance(q, Parity)) == 2


def test_numeric_pool_singleton_degenerates():
    pool = numeric_question_pool(numbers(7, 7))
    assert all(eig(numbers(7, 7), q) == 0.0 for q in pool)


def test_oracle_picks_balanced_split_on_window():
    cands = numbers(86, 185)
    rng = random.Random(0)
    for _ in range(20):
        question = oracle_next_question(cands, OracleConfig(pool="numeric_templates"), rng, allow_guess=False)
        assert eig(cands, question) == pytest.approx(1.0, abs=1e-4)


def test_oracle_guess_who_always_near_max():
    schema, characters = guess_who_dataset()
    rng = random.Random(1)
    config = OracleConfig(pool="attribute_values")
    scored = eig_all(characters, attribute_question_pool(schema), schema)
    best = scored[0][1]
    assert best == pytest.approx(1.0, abs=1e-12)
    for _ in range(25):
        question = oracle_next_question(characters, config, rng, schema=schema, allow_guess=False)
        assert eig(characters, question, schema) >= best - config.tau


def test_oracle_guess_threshold():
    cands = numbers(1, 2)
    rng = random.Random(2)
    question = oracle_next_question(cands, OracleConfig(pool="numeric_templates"), rng)
    assert isinstance(question, Guess)
    assert question.candidate_id in ("1", "2")


def test_oracle_deterministic_with_zero_tau_unique_max():
    # template complements always tie, so a unique maximizer needs a custom pool
    cands = numbers(1, 4)
    config = OracleConfig(
        tau=0.0,
        pool="custom",
        custom_pool=(NumericComparison("<=", 2), NumericComparison("<=", 1)),
    )
    picks = {
        oracle_next_question(cands, config, random.Random(seed), allow_guess=False)
        for seed in range(10)
    }
    assert picks == {NumericComparison("<=", 2)}


def test_oracle_never_repeats_questions():
    schema, characters = guess_who_dataset()
    rng = random.Random(3)
    policy = OraclePolicy(OracleConfig(pool="attribute_values"), schema=schema, allow_guess=False)
    remaining = characters
    target = characters[17]
    seen = set()
    history = DialogueHistory()
    while len(remaining) > 1:
        question = policy.next_question(remaining, history, rng)
        assert question not in seen
        seen.add(question)
        answer = truthful_answer(question, target, schema)
        remaining = tabular_filter(remaining, question, answer, schema)
    assert remaining[0].id == target.id


def test_oracle_identifies_power_of_two_window_in_k_questions():
    # 64 candidates, singleton termination: exactly 6 balanced questions
    rng = random.Random(4)
    target = Candidate(id="100", number=100)
    for trial in range(5):
        remaining = tuple(Candidate(id=str(n), number=n) for n in range(70, 134))
        policy = OraclePolicy(OracleConfig(pool="numeric_templates"), allow_guess=False)
        questions = 0
        while len(remaining) > 1:
            question = policy.next_question(remaining, DialogueHistory(), rng)
            answer = truthful_answer(question, target)
            remaining = tabular_filter(remaining, question, answer)
            questions += 1
        assert questions == 6


def test_oracle_exhausted_pool():
    # two candidates with identical attributes: every question has zero gain
    schema, _ = guess_who_dataset()
    row = {name: values[0] for name, values in schema.attributes}
    twins = (
        Candidate(id="t1", attributes=dict(row)),
        Candidate(id="t2", attributes=dict(row)),
    )
    with pytest.raises(ExhaustedPool):
        oracle_next_question(
            twins, OracleConfig(pool="attribute_values", guess_threshold=1), random.Random(0), schema=schema
        )


def test_replay_policy():
    script = [Parity("odd"), NumericComparison("<=", 3), Guess("2")]
    policy = ReplayPolicy(script)
    rng = random.Random(0)
    out = [policy.next_question((), DialogueHistory(), rng) for _ in range(3)]
    assert out == script
    with pytest.raises(ExhaustedScript):
        policy.next_question((), DialogueHistory(), rng)


def test_replay_policy_empty_script():
    policy = ReplayPolicy([])
    with pytest.raises(ExhaustedScript):
        policy.next_question((), DialogueHistory(), random.Random(0))


def test_parse_question_text_rules():
    q = parse_question_text("Is the person wearing glasses?")
    assert q == KeywordQuery("glasses")
    q = parse_question_text("Does the person have a beard?")
    assert q == KeywordQuery("beard")
    q = parse_question_text("blonde hair")
    assert q == KeywordQuery("blonde hair")
    q = parse_question_text("Would you kindly explain the whole backstory of this person?")
    assert isinstance(q, FreeText)


def test_parse_question_text_empty():
    with pytest.raises(UnparseableQuestion):
        parse_question_text("   ?")
