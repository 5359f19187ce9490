"""Core type semantics: histories, feedback rendering, JSON round-trips."""

import json

import pytest

from inquest.core import (
    Answer,
    AttributeQuery,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    EnvironmentSpec,
    EpisodeRecord,
    FeedbackKind,
    FeedbackMode,
    FreeText,
    Guess,
    KeywordQuery,
    NumericComparison,
    Parity,
    RewardParams,
    SessionConfig,
    TabularResult,
    RankingResult,
    Termination,
    TerminationKind,
    append_turn,
    evaluate_question,
    question_from_dict,
    question_to_dict,
    render_feedback,
)
from inquest.environments import guess_who_dataset
from inquest.errors import ConfigError, TurnBudgetExceeded


def test_append_turn_base_case():
    history = DialogueHistory()
    out = append_turn(history, KeywordQuery("glasses"), Answer.YES)
    assert len(out) == 1
    assert len(history) == 0  # value semantics: original untouched


def test_append_turn_budget_boundary():
    history = DialogueHistory()
    for i in range(3):
        history = append_turn(history, Guess(str(i)), Answer.NO, t_max=3)
    with pytest.raises(TurnBudgetExceeded):
        append_turn(history, Guess("x"), Answer.NO, t_max=3)


def test_append_turn_with_rendered_feedback():
    schema, characters = guess_who_dataset()
    feedback = render_feedback(
        TabularResult(characters, schema), FeedbackMode(FeedbackKind.DISTRIBUTION)
    )
    history = append_turn(DialogueHistory(), AttributeQuery("gender", "male"), Answer.NO, feedback)
    assert history.turns[0].feedback_text == feedback
    assert "gender: male=18, female=18" in feedback


def test_render_feedback_distribution_full_board():
    schema, characters = guess_who_dataset()
    text = render_feedback(TabularResult(characters, schema), FeedbackMode(FeedbackKind.DISTRIBUTION))
    assert "gender: male=18, female=18" in text
    # deterministic: byte-identical on repeat calls
    again = render_feedback(TabularResult(characters, schema), FeedbackMode(FeedbackKind.DISTRIBUTION))
    assert text == again


def test_render_feedback_empty_set():
    schema, _ = guess_who_dataset()
    text = render_feedback(TabularResult((), schema), FeedbackMode(FeedbackKind.DISTRIBUTION))
    assert text == "no candidates remain"


def test_render_feedback_topk_truncates_in_rank_order():
    candidates = {
        f"i{k}": Candidate(id=f"i{k}", attributes={"smiling": "yes"}, embedding_ref=f"i{k}")
        for k in range(3)
    }
    ranking = (("i2", 0.9), ("i0", 0.5), ("i1", 0.1))
    text = render_feedback(RankingResult(ranking, candidates), FeedbackMode(FeedbackKind.TOP_K, 2))
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("1. i2")
    assert lines[1].startswith("2. i0")


def test_schema_invariants():
    with pytest.raises(ConfigError):
        AttributeSchema((("a", ("x", "y")), ("a", ("p", "q"))))
    with pytest.raises(ConfigError):
        AttributeSchema((("a", ("x",)),))


def test_candidate_payload_exclusive():
    with pytest.raises(ConfigError):
        Candidate(id="bad", number=3, attributes={"a": "x"})
    with pytest.raises(ConfigError):
        Candidate(id="bad")


def test_evaluate_question_variants():
    c = Candidate(id="42", number=42)
    assert evaluate_question(NumericComparison("<=", 42), c) is True
    assert evaluate_question(NumericComparison("<", 42), c) is False
    assert evaluate_question(Parity("even"), c) is True
    assert evaluate_question(Guess("42"), c) is True
    assert evaluate_question(Guess("41"), c) is False
    assert evaluate_question(FreeText("anything"), c) is None

    schema, characters = guess_who_dataset()
    c04 = next(ch for ch in characters if ch.id == "C04")
    assert evaluate_question(AttributeQuery("gender", "female"), c04, schema) is True
    assert evaluate_question(KeywordQuery("white hair color"), c04, schema) is True
    assert evaluate_question(KeywordQuery("has beard"), c04, schema) is False
    assert evaluate_question(KeywordQuery("unknowable thing"), c04, schema) is None


@pytest.mark.parametrize(
    "question",
    [
        AttributeQuery("gender", "male"),
        NumericComparison("<=", 135),
        Parity("odd"),
        KeywordQuery("blonde hair"),
        Guess("C07"),
        FreeText("Is it sunny?"),
    ],
)
def test_question_json_round_trip(question):
    assert question_from_dict(question_to_dict(question)) == question


def test_history_and_episode_json_round_trip():
    history = append_turn(DialogueHistory(), AttributeQuery("gender", "male"), Answer.NO, "gender: male=0, female=18")
    history = append_turn(history, Guess("C04"), Answer.YES)
    config = SessionConfig(
        environment=EnvironmentSpec(kind="guess_who"),
        t_max=16,
        termination=Termination(TerminationKind.EXPLICIT_GUESS),
        feedback=FeedbackMode(FeedbackKind.DISTRIBUTION),
        seed=7,
    )
    episode = EpisodeRecord(
        config=config,
        target_id="C04",
        turns=history,
        step_scores=(1.0, 0.9),
        success=True,
        turn_count=2,
        trajectory_reward=2.8625,
        seed=7,
    )
    line = episode.to_json_line()
    assert EpisodeRecord.from_json_line(line) == episode
    assert json.loads(line)["target_id"] == "C04"

    assert DialogueHistory.from_dict(history.to_dict()) == history
    assert SessionConfig.from_dict(config.to_dict()) == config


def test_episode_invariants():
    config = SessionConfig(environment=EnvironmentSpec(kind="guess_who"))
    history = append_turn(DialogueHistory(), Guess("C01"), Answer.NO)
    with pytest.raises(ConfigError):
        EpisodeRecord(
            config=config,
            target_id="C04",
            turns=history,
            step_scores=(0.1, 0.2),  # two scores, one turn
            success=True,
            turn_count=1,
            trajectory_reward=1.0,
            seed=0,
        )
    with pytest.raises(ConfigError):
        EpisodeRecord(
            config=config,
            target_id="C04",
            turns=history,
            step_scores=(0.1,),
            success=False,
            turn_count=1,
            trajectory_reward=0.5,  # failures must earn -kappa
            seed=0,
        )


def test_session_config_validation():
    with pytest.raises(ConfigError):
        SessionConfig(
            environment=EnvironmentSpec(kind="guess_who"),
            termination=Termination(TerminationKind.RANK_AT_MOST, 5),
        )
    with pytest.raises(ConfigError):
        RewardParams(soft_penalty=-0.6)
    with pytest.raises(ConfigError):
        RewardParams(kappa=0.0)


def test_schema_keyword_phrases_round_trip():
    schema, _ = guess_who_dataset()
    assert schema.keyword_phrase("hair_color", "blonde") == "blonde hair color"
    assert schema.keyword_phrase("has_beard", "yes") == "has beard"
    assert schema.ground_keyword("blonde hair color") == ("hair_color", "blonde")
    assert schema.ground_keyword("has beard") == ("has_beard", "yes")
    assert schema.ground_keyword("nonsense") is None
