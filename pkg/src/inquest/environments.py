"""Task environments, the embedded character dataset, and truthful answering.

Three environments: a 100-integer window, the 36-character board, and an
annotated image collection with an embedding ranker. Each environment can
answer structured questions truthfully for its hidden target and advance a
live simulation state one question at a time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence

from .core import (
    Answer,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    EnvironmentSpec,
    FeedbackKind,
    FreeText,
    Guess,
    KeywordQuery,
    Question,
    RankingResult,
    SessionConfig,
    TabularResult,
    TerminationKind,
    append_turn,
    check_unique_ids,
    evaluate_question,
    render_feedback,
)
from .errors import ConfigError, SessionClosed, TurnBudgetExceeded, UnknownTarget
from .retrievers import (
    EmbeddingStore,
    GateParams,
    RankedList,
    load_store,
    parse_keywords,
    rank_images,
    tabular_filter,
    target_rank,
)

# ---------------------------------------------------------------------------
# Embedded character dataset (36 characters, 9 attributes)
# ---------------------------------------------------------------------------

_ATTRIBUTE_UNIVERSE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("gender", ("male", "female")),
    ("hair_color", ("red", "blonde", "black", "white", "brown")),
    ("hairstyle", ("curly", "short", "long", "bald")),
    ("wears_glasses", ("no", "yes")),
    ("has_beard", ("no", "yes")),
    ("eye_color", ("amber", "brown", "green", "blue")),
    ("hobby", ("movies", "photography", "music", "games", "reading", "sports")),
    ("wears_earrings", ("no", "yes")),
    ("occupation", ("police", "student", "teacher", "chef", "doctor")),
)

# name, gender, hair color, hairstyle, glasses, beard, eyes, hobby, earrings, occupation
_CHARACTER_ROWS: tuple[tuple[str, ...], ...] = (
    ("C01", "male", "red", "curly", "no", "no", "amber", "movies", "no", "police"),
    ("C02", "male", "blonde", "short", "no", "no", "brown", "photography", "no", "student"),
    ("C03", "male", "black", "long", "no", "yes", "brown", "music", "yes", "teacher"),
    ("C04", "female", "white", "long", "yes", "no", "amber", "games", "no", "police"),
    ("C05", "female", "brown", "short", "no", "no", "green", "reading", "yes", "student"),
    ("C06", "female", "brown", "long", "no", "no", "green", "sports", "no", "police"),
    ("C07", "female", "black", "curly", "yes", "no", "blue", "sports", "no", "chef"),
    ("C08", "female", "blonde", "short", "yes", "no", "green", "music", "yes", "chef"),
    ("C09", "female", "black", "long", "yes", "no", "blue", "reading", "yes", "teacher"),
    ("C10", "female", "white", "short", "no", "no", "amber", "music", "no", "chef"),
    ("C11", "female", "black", "short", "yes", "no", "blue", "games", "no", "chef"),
    ("C12", "male", "red", "bald", "no", "no", "blue", "reading", "no", "chef"),
    ("C13", "male", "blonde", "bald", "yes", "yes", "amber", "music", "no", "doctor"),
    ("C14", "female", "red", "curly", "yes", "no", "blue", "photography", "yes", "student"),
    ("C15", "male", "blonde", "bald", "no", "yes", "brown", "reading", "yes", "police"),
    ("C16", "female", "red", "long", "yes", "no", "brown", "music", "no", "doctor"),
    ("C17", "male", "white", "bald", "yes", "yes", "blue", "reading", "no", "teacher"),
    ("C18", "female", "white", "long", "no", "no", "green", "games", "yes", "student"),
    ("C19", "male", "white", "bald", "yes", "yes", "green", "games", "yes", "teacher"),
    ("C20", "female", "red", "short", "no", "no", "green", "reading", "yes", "doctor"),
    ("C21", "male", "white", "bald", "yes", "no", "green", "photography", "yes", "teacher"),
    ("C22", "female", "blonde", "long", "yes", "no", "amber", "movies", "no", "student"),
    ("C23", "male", "black", "short", "no", "no", "brown", "photography", "yes", "police"),
    ("C24", "female", "brown", "curly", "yes", "no", "blue", "music", "no", "doctor"),
    ("C25", "male", "blonde", "curly", "no", "yes", "blue", "movies", "yes", "police"),
    ("C26", "female", "red", "short", "no", "no", "green", "sports", "no", "doctor"),
    ("C27", "female", "brown", "curly", "no", "no", "amber", "movies", "yes", "chef"),
    ("C28", "female", "white", "short", "no", "no", "brown", "games", "yes", "chef"),
    ("C29", "male", "brown", "bald", "yes", "yes", "amber", "movies", "yes", "teacher"),
    ("C30", "female", "black", "curly", "no", "no", "amber", "sports", "no", "teacher"),
    ("C31", "male", "black", "bald", "yes", "no", "brown", "movies", "no", "police"),
    ("C32", "male", "white", "long", "yes", "yes", "blue", "photography", "yes", "teacher"),
    ("C33", "male", "brown", "curly", "yes", "yes", "amber", "photography", "yes", "student"),
    ("C34", "male", "brown", "bald", "yes", "yes", "brown", "sports", "no", "student"),
    ("C35", "male", "blonde", "long", "no", "yes", "brown", "games", "yes", "doctor"),
    ("C36", "male", "red", "curly", "no", "yes", "green", "sports", "no", "doctor"),
)


def guess_who_dataset() -> tuple[AttributeSchema, tuple[Candidate, ...]]:
    """The embedded 36-character board and its 9-attribute universe."""
    schema = AttributeSchema(_ATTRIBUTE_UNIVERSE)
    names = schema.names
    candidates = tuple(
        Candidate(id=row[0], attributes=dict(zip(names, row[1:])))
        for row in _CHARACTER_ROWS
    )
    return schema, candidates


def normalized_entropy(
    candidates: Sequence[Candidate],
    attribute: str,
    schema: AttributeSchema,
) -> float:
    """Entropy of the attribute's value distribution over log2(#possible values)."""
    values = schema.values(attribute)
    counts = {v: 0 for v in values}
    for c in candidates:
        counts[c.attributes[attribute]] += 1
    total = sum(counts.values())
    if total == 0:
        return 0.0
    h = -math.fsum(
        (n / total) * math.log2(n / total) for n in counts.values() if n > 0
    )
    return h / math.log2(len(values))


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _number_window(window_start: int, length: int) -> tuple[Candidate, ...]:
    return tuple(Candidate(id=str(n), number=n) for n in range(window_start, window_start + length))


@dataclass(frozen=True)
class GuessNumberEnv:
    """A window of 100 consecutive integers inside [0, 1000] hiding one target."""

    window_start: int
    target: int

    WINDOW_LENGTH = 100

    def __post_init__(self) -> None:
        if not (0 <= self.window_start <= 1000 - self.WINDOW_LENGTH):
            raise ConfigError("window must fit inside [0, 1000]")
        if not (self.window_start <= self.target < self.window_start + self.WINDOW_LENGTH):
            raise ConfigError("target must lie inside the window")

    @property
    def candidates(self) -> tuple[Candidate, ...]:
        return _number_window(self.window_start, self.WINDOW_LENGTH)

    @property
    def target_id(self) -> str:
        return str(self.target)

    schema = None
    kind = "guess_number"


@dataclass(frozen=True)
class GuessWhoEnv:
    """The embedded 36-character board with one hidden character."""

    target_id: str
    schema: AttributeSchema = field(default_factory=lambda: guess_who_dataset()[0])
    characters: tuple[Candidate, ...] = field(default_factory=lambda: guess_who_dataset()[1])

    kind = "guess_who"

    def __post_init__(self) -> None:
        check_unique_ids(self.characters)
        if len(self.characters) != 36:
            raise ConfigError("the board holds exactly 36 characters")
        for c in self.characters:
            self.schema.validate_candidate(c)
        if self.target_id not in {c.id for c in self.characters}:
            raise UnknownTarget(f"{self.target_id!r} is not on the board")

    @property
    def candidates(self) -> tuple[Candidate, ...]:
        return self.characters


@dataclass(frozen=True)
class ImageEnv:
    """Annotated images ranked by an embedding store; success is target rank <= K."""

    store: EmbeddingStore
    annotations: tuple[Candidate, ...]
    target_id: str
    schema: AttributeSchema
    success_rank: int = 5
    gate: GateParams = field(default_factory=GateParams)

    kind = "image"

    def __post_init__(self) -> None:
        check_unique_ids(self.annotations)
        ids = {c.id for c in self.annotations}
        if ids != set(self.store.image_ids):
            raise ConfigError("annotations and embedding store must cover identical ids")
        for c in self.annotations:
            if c.embedding_ref is None or c.embedding_ref not in self.store:
                raise ConfigError(f"candidate {c.id} references no stored embedding")
        if self.target_id not in ids:
            raise UnknownTarget(f"{self.target_id!r} has no annotation")
        if self.success_rank < 1:
            raise ConfigError("success_rank must be >= 1")

    @property
    def candidates(self) -> tuple[Candidate, ...]:
        return self.annotations


Environment = GuessNumberEnv | GuessWhoEnv | ImageEnv


def image_candidates_from_annotations(
    annotations: Mapping[str, Mapping[str, int]],
) -> tuple[AttributeSchema, tuple[Candidate, ...]]:
    """Turn {id: {attribute: 1|-1}} annotation maps into yes/no image candidates."""
    names = sorted({name for attrs in annotations.values() for name in attrs})
    schema = AttributeSchema(tuple((name, ("no", "yes")) for name in names))
    candidates = []
    for image_id in sorted(annotations):
        attrs = annotations[image_id]
        mapped = {name: ("yes" if attrs.get(name, -1) == 1 else "no") for name in names}
        candidates.append(Candidate(id=image_id, attributes=mapped, embedding_ref=image_id))
    return schema, tuple(candidates)


def load_annotations(path) -> dict[str, dict[str, int]]:
    """Read a JSONL annotations file of {id, attributes: {name: 1|-1}} records."""
    out: dict[str, dict[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["id"]] = {k: int(v) for k, v in record["attributes"].items()}
    return out


def build_environment(spec: EnvironmentSpec, target_id: str) -> Environment:
    """Instantiate the environment named by a session config for a given target."""
    if spec.kind == "guess_number":
        if spec.window_start is None:
            raise ConfigError("guess_number environments need a window_start")
        return GuessNumberEnv(spec.window_start, int(target_id))
    if spec.kind == "guess_who":
        return GuessWhoEnv(target_id=target_id)
    if spec.store_path is None or spec.annotations_path is None:
        raise ConfigError("image environments need store_path and annotations_path")
    store = load_store(spec.store_path, spec.keywords_path)
    schema, annotations = image_candidates_from_annotations(load_annotations(spec.annotations_path))
    return ImageEnv(
        store=store,
        annotations=annotations,
        target_id=target_id,
        schema=schema,
        success_rank=spec.success_rank,
    )


# ---------------------------------------------------------------------------
# Truthful answering
# ---------------------------------------------------------------------------


def truthful_answer(
    question: Question,
    target: Candidate,
    schema: Optional[AttributeSchema] = None,
) -> Answer:
    """Answer exactly from the target's facts; undefined predicates get CantAnswer."""
    verdict = evaluate_question(question, target, schema)
    if verdict is None:
        return Answer.CANT_ANSWER
    return Answer.YES if verdict else Answer.NO


class ExternalAnswerer:
    """JSON-over-HTTP answerer: {question, target_attributes} -> {answer}.

    Any reply that is not exactly yes/no (case-insensitive, punctuation
    stripped) coerces to CantAnswer, so free-form model output can never
    corrupt the three-valued contract.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, question: Question, target: Candidate, schema=None) -> Answer:
        import httpx

        from .core import question_text
        from .errors import ClientTimeout

        payload = {
            "question": question_text(question, schema),
            "target_attributes": target.to_dict(),
        }
        try:
            response = httpx.post(self.endpoint, json=payload, timeout=self.timeout)
            response.raise_for_status()
        except httpx.TimeoutException as exc:
            raise ClientTimeout(f"answerer timed out: {exc}") from exc
        return Answer.from_text(str(response.json().get("answer", "")))


# ---------------------------------------------------------------------------
# Live simulation state
# ---------------------------------------------------------------------------


@dataclass
class StepResult:
    answer: Answer
    feedback: Optional[str]
    done: bool
    info: dict


@dataclass
class SimulationState:
    """Single-writer episode state: the surviving pool, history, and rank trace."""

    env: Environment
    config: SessionConfig
    answerer: Callable[..., Answer] = truthful_answer
    candidates: tuple[Candidate, ...] = ()
    history: DialogueHistory = field(default_factory=DialogueHistory)
    ranking: Optional[RankedList] = None
    rank_trace: list[int] = field(default_factory=list)
    step_scores: list[float] = field(default_factory=list)
    done: bool = False
    success: bool = False

    def __post_init__(self) -> None:
        if not self.candidates:
            self.candidates = self.env.candidates
        self._target = _target_candidate(self.env)
        if isinstance(self.env, ImageEnv):
            self.ranking = rank_images(self.env.store, parse_keywords(DialogueHistory(), self.env.schema), self.env.gate)
            self.rank_trace = [target_rank(self.ranking, self.env.target_id)]

    @property
    def turn_count(self) -> int:
        return len(self.history)


def _target_candidate(env: Environment) -> Candidate:
    for c in env.candidates:
        if c.id == env.target_id:
            return c
    raise UnknownTarget(env.target_id)


def _check_termination(state: SimulationState, question: Question, answer: Answer) -> None:
    term = state.config.termination
    if term.kind is TerminationKind.SINGLETON:
        if not isinstance(state.env, ImageEnv) and len(state.candidates) == 1:
            state.done = True
            state.success = state.candidates[0].id == state.env.target_id
    elif term.kind is TerminationKind.EXPLICIT_GUESS:
        if isinstance(question, Guess) and answer is Answer.YES:
            state.done = True
            state.success = True
    else:  # RANK_AT_MOST
        if state.rank_trace and state.rank_trace[-1] <= term.k:
            state.done = True
            state.success = True


def env_step(state: SimulationState, question: Question) -> StepResult:
    """Answer one question, update the pool or ranking, and report termination.

    The step score for the turn is left to the caller (it needs the reward
    params); `info` carries the pre/post candidate counts or target ranks.
    """
    if state.done:
        raise SessionClosed("episode already terminated")
    if state.turn_count >= state.config.t_max:
        raise TurnBudgetExceeded(f"turn budget {state.config.t_max} already spent")

    env = state.env
    target = state._target
    schema = env.schema
    answer = state.answerer(question, target, schema)
    info: dict = {"candidate_count_before": len(state.candidates)}

    if isinstance(env, ImageEnv):
        info["rank_before"] = state.rank_trace[-1]
        pending = append_turn(state.history, question, answer, None, state.config.t_max)
        keywords = parse_keywords(pending, schema)
        state.ranking = rank_images(env.store, keywords, env.gate)
        rank_after = target_rank(state.ranking, env.target_id)
        state.rank_trace.append(rank_after)
        info["rank_after"] = rank_after
        feedback = None
        if state.config.feedback.kind is not FeedbackKind.NONE:
            feedback = render_feedback(
                RankingResult(state.ranking.entries, {c.id: c for c in env.candidates}),
                state.config.feedback,
            )
    else:
        filterable = not isinstance(question, FreeText)
        if isinstance(question, KeywordQuery):
            filterable = schema is not None and schema.ground_keyword(question.keyword) is not None
        if filterable:
            state.candidates = tabular_filter(state.candidates, question, answer, schema)
        feedback = None
        if state.config.feedback.kind is not FeedbackKind.NONE:
            feedback = render_feedback(TabularResult(state.candidates, schema), state.config.feedback)

    state.history = append_turn(state.history, question, answer, feedback, state.config.t_max)
    info["candidate_count"] = len(state.candidates)
    _check_termination(state, question, answer)
    if not state.done and state.turn_count >= state.config.t_max:
        state.done = True
        state.success = False
    info["done"] = state.done
    info["success"] = state.success
    return StepResult(answer=answer, feedback=feedback, done=state.done, info=info)
