"""Environments, the embedded character board, and truthful answering."""

import random

import pytest

from inquest.core import (
    Answer,
    AttributeQuery,
    EnvironmentSpec,
    FeedbackKind,
    FeedbackMode,
    FreeText,
    Guess,
    KeywordQuery,
    NumericComparison,
    SessionConfig,
    Termination,
    TerminationKind,
)
from inquest.environments import (
    GuessNumberEnv,
    GuessWhoEnv,
    ImageEnv,
    SimulationState,
    env_step,
    guess_who_dataset,
    image_candidates_from_annotations,
    normalized_entropy,
    truthful_answer,
)
from inquest.errors import ConfigError, SessionClosed, TurnBudgetExceeded
from inquest.retrievers import EmbeddingStore, tabular_filter


def test_dataset_row_count_and_attributes():
    schema, characters = guess_who_dataset()
    assert len(characters) == 36
    assert len(schema.names) == 9
    assert all(len(c.attributes) == 9 for c in characters)


def test_dataset_c04_row():
    _, characters = guess_who_dataset()
    c04 = next(c for c in characters if c.id == "C04")
    assert c04.attributes == {
        "gender": "female",
        "hair_color": "white",
        "hairstyle": "long",
        "wears_glasses": "yes",
        "has_beard": "no",
        "eye_color": "amber",
        "hobby": "games",
        "wears_earrings": "no",
        "occupation": "police",
    }


def test_dataset_attribute_universe():
    schema, _ = guess_who_dataset()
    universe = dict(schema.attributes)
    assert universe["gender"] == ("male", "female")
    assert universe["hair_color"] == ("red", "blonde", "black", "white", "brown")
    assert universe["hairstyle"] == ("curly", "short", "long", "bald")
    assert universe["wears_glasses"] == ("no", "yes")
    assert universe["has_beard"] == ("no", "yes")
    assert universe["eye_color"] == ("amber", "brown", "green", "blue")
    assert universe["hobby"] == ("movies", "photography", "music", "games", "reading", "sports")
    assert universe["wears_earrings"] == ("no", "yes")
    assert universe["occupation"] == ("police", "student", "teacher", "chef", "doctor")


def test_truthful_answer_c33_beard():
    schema, characters = guess_who_dataset()
    c33 = next(c for c in characters if c.id == "C33")
    assert truthful_answer(AttributeQuery("has_beard", "yes"), c33, schema) is Answer.YES


def test_truthful_answer_numeric():
    from inquest.core import Candidate

    target = Candidate(id="143", number=143)
    assert truthful_answer(NumericComparison("<=", 135), target) is Answer.NO


def test_truthful_answer_free_text_without_client():
    _, characters = guess_who_dataset()
    assert truthful_answer(FreeText("hmm?"), characters[0]) is Answer.CANT_ANSWER


def test_truthful_answers_never_contradict_filtering():
    rng = random.Random(11)
    schema, characters = guess_who_dataset()
    pool = [
        AttributeQuery(name, value)
        for name, values in schema.attributes
        for value in values
    ]
    for _ in range(100):
        target = rng.choice(characters)
        remaining = characters
        for _ in range(6):
            question = rng.choice(pool)
            answer = truthful_answer(question, target, schema)
            remaining = tabular_filter(remaining, question, answer, schema)
            assert any(c.id == target.id for c in remaining)


def test_normalized_entropy_values():
    schema, characters = guess_who_dataset()
    assert normalized_entropy(characters, "gender", schema) == pytest.approx(1.0, abs=1e-12)
    # 12 bearded / 24 clean-shaven
    assert normalized_entropy(characters, "has_beard", schema) == pytest.approx(0.9183, abs=1e-4)
    single = characters[:1]
    for name in schema.names:
        assert normalized_entropy(single, name, schema) == 0.0


def test_guess_number_env_window():
    env = GuessNumberEnv(window_start=86, target=143)
    assert len(env.candidates) == 100
    assert env.candidates[0].number == 86
    assert env.candidates[-1].number == 185
    with pytest.raises(ConfigError):
        GuessNumberEnv(window_start=950, target=960)
    with pytest.raises(ConfigError):
        GuessNumberEnv(window_start=0, target=500)


def test_random_windows_stay_in_range():
    rng = random.Random(3)
    for _ in range(200):
        start = rng.randint(0, 900)
        env = GuessNumberEnv(window_start=start, target=start + rng.randint(0, 99))
        numbers = [c.number for c in env.candidates]
        assert len(numbers) == 100
        assert 0 <= numbers[0] and numbers[-1] <= 1000


def _tabular_state(termination=TerminationKind.SINGLETON, feedback=FeedbackKind.NONE, t_max=16):
    config = SessionConfig(
        environment=EnvironmentSpec(kind="guess_who"),
        t_max=t_max,
        termination=Termination(termination),
        feedback=FeedbackMode(feedback),
    )
    env = GuessWhoEnv(target_id="C04")
    return SimulationState(env=env, config=config)


def test_env_step_singleton_termination():
    state = _tabular_state()
    # female + white hair + games narrows to {C04, C18, C28}; glasses isolates C04
    script = [
        AttributeQuery("gender", "female"),
        AttributeQuery("hair_color", "white"),
        AttributeQuery("hobby", "games"),
        AttributeQuery("wears_glasses", "yes"),
    ]
    counts = []
    for q in script:
        result = env_step(state, q)
        counts.append(result.info["candidate_count"])
    assert counts == [18, 4, 3, 1]
    assert state.done
    assert state.success
    assert [c.id for c in state.candidates] == ["C04"]


def test_env_step_turn_budget():
    state = _tabular_state(t_max=2)
    env_step(state, AttributeQuery("hobby", "movies"))
    env_step(state, AttributeQuery("eye_color", "blue"))
    assert state.done and not state.success
    with pytest.raises(SessionClosed):
        env_step(state, AttributeQuery("gender", "female"))


def test_env_step_17th_question_with_budget_16():
    config = SessionConfig(environment=EnvironmentSpec(kind="guess_who"), t_max=16)
    env = GuessWhoEnv(target_id="C04")
    state = SimulationState(env=env, config=config)
    state.done = False
    # spend the full budget on no-op turns
    from inquest.core import append_turn

    for i in range(16):
        state.history = append_turn(state.history, FreeText(str(i)), Answer.CANT_ANSWER)
    with pytest.raises(TurnBudgetExceeded):
        env_step(state, AttributeQuery("gender", "female"))


def test_env_step_explicit_guess():
    state = _tabular_state(termination=TerminationKind.EXPLICIT_GUESS)
    result = env_step(state, Guess("C05"))
    assert result.answer is Answer.NO
    assert not state.done
    assert len(state.candidates) == 35  # wrong guess eliminated
    result = env_step(state, Guess("C04"))
    assert result.answer is Answer.YES
    assert state.done and state.success


def test_env_step_feedback_distribution():
    state = _tabular_state(feedback=FeedbackKind.DISTRIBUTION)
    result = env_step(state, AttributeQuery("gender", "male"))
    assert result.answer is Answer.NO
    assert "gender: male=0, female=18" in result.feedback


def _image_state(success_rank=1, t_max=8, feedback=FeedbackKind.NONE, k=None):
    dim = 3
    vectors = {
        "a": [1.0, 0.0, 0.0],
        "b": [0.0, 1.0, 0.0],
        "c": [0.0, 0.0, 1.0],
    }
    keywords = {
        "first trait": [1.0, 0.0, 0.0],
        "second trait": [0.0, 1.0, 0.0],
    }
    store = EmbeddingStore(dim, vectors, keywords)
    schema, annotations = image_candidates_from_annotations(
        {
            "a": {"first_trait": 1, "second_trait": -1},
            "b": {"first_trait": -1, "second_trait": 1},
            "c": {"first_trait": -1, "second_trait": -1},
        }
    )
    env = ImageEnv(store=store, annotations=annotations, target_id="b", schema=schema, success_rank=success_rank)
    config = SessionConfig(
        environment=EnvironmentSpec(kind="image", success_rank=success_rank),
        t_max=t_max,
        termination=Termination(TerminationKind.RANK_AT_MOST, k or success_rank),
        feedback=FeedbackMode(feedback, 2 if feedback is FeedbackKind.TOP_K else None),
    )
    return SimulationState(env=env, config=config)


def test_env_step_image_rank_tracking():
    state = _image_state()
    assert state.rank_trace == [2]  # id order before any keywords
    result = env_step(state, KeywordQuery("second trait"))
    assert result.answer is Answer.YES
    assert state.rank_trace[-1] == 1
    assert state.done and state.success


def test_env_step_image_negative_keyword_promotes_target():
    state = _image_state(success_rank=2)
    # target b lacks "first trait": the No answer makes it a negative keyword,
    # which discounts image a and lifts b to the top
    result = env_step(state, KeywordQuery("first trait"))
    assert result.answer is Answer.NO
    assert state.rank_trace == [2, 1]
    assert result.done and state.success


def test_image_env_id_mismatch_rejected():
    store = EmbeddingStore(2, {"a": [1.0, 0.0]})
    schema, annotations = image_candidates_from_annotations({"a": {"x": 1}, "b": {"x": -1}})
    with pytest.raises(ConfigError):
        ImageEnv(store=store, annotations=annotations, target_id="a", schema=schema)


def test_env_step_deterministic_given_script():
    script = [
        AttributeQuery("gender", "female"),
        AttributeQuery("eye_color", "amber"),
        AttributeQuery("hobby", "games"),
    ]

    def run():
        state = _tabular_state(feedback=FeedbackKind.DISTRIBUTION)
        transcript = []
        for q in script:
            if state.done:
                break
            result = env_step(state, q)
            transcript.append((result.answer.value, result.feedback, result.done))
        return transcript

    assert run() == run()
