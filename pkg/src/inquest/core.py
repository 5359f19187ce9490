"""Domain types shared by every part of the engine.

Candidates, questions, answers, dialogue histories, episode records and the
session configuration are immutable value types with JSON round-trip codecs.
All mutation-style operations return new values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import ConfigError, TurnBudgetExceeded


class Answer(str, Enum):
    """The three-valued user response."""

    YES = "yes"
    NO = "no"
    CANT_ANSWER = "cant_answer"

    @classmethod
    def from_text(cls, text: str) -> "Answer":
        """Coerce free-form text to an answer; anything ambiguous maps to CANT_ANSWER."""
        cleaned = "".join(ch for ch in text.strip().lower() if ch.isalnum() or ch == "_")
        if cleaned == "yes":
            return cls.YES
        if cleaned == "no":
            return cls.NO
        return cls.CANT_ANSWER


# ---------------------------------------------------------------------------
# Schema and candidates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute universe: (name, allowed values) pairs.

    Attribute names are unique and every attribute has at least two values.
    """

    attributes: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.attributes]
        if len(names) != len(set(names)):
            raise ConfigError("attribute names must be unique")
        for name, values in self.attributes:
            if len(set(values)) < 2:
                raise ConfigError(f"attribute {name!r} needs at least 2 distinct values")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.attributes)

    def values(self, attribute: str) -> tuple[str, ...]:
        for name, values in self.attributes:
            if name == attribute:
                return values
        raise KeyError(attribute)

    def has_attribute(self, attribute: str) -> bool:
        return any(name == attribute for name, _ in self.attributes)

    def is_binary(self, attribute: str) -> bool:
        return set(self.values(attribute)) == {"yes", "no"}

    def keyword_phrase(self, attribute: str, value: str) -> str:
        """Canonical retrieval phrase for an (attribute, value) pair.

        Yes/no attributes render to the attribute words alone ("has beard");
        everything else to "<value> <attribute words>" ("blonde hair color").
        """
        words = attribute.replace("_", " ")
        if self.is_binary(attribute):
            return words
        return f"{value} {words}"

    def ground_keyword(self, keyword: str) -> Optional[tuple[str, str]]:
        """Invert keyword_phrase; None when the keyword matches no known pair."""
        cleaned = keyword.strip().lower()
        for name, values in self.attributes:
            words = name.replace("_", " ")
            if set(values) == {"yes", "no"}:
                if cleaned == words:
                    return (name, "yes")
                continue
            for value in values:
                if cleaned == f"{value} {words}":
                    return (name, value)
        return None

    def validate_candidate(self, candidate: "Candidate") -> None:
        attrs = candidate.attributes
        if attrs is None:
            raise ConfigError(f"candidate {candidate.id} carries no attribute map")
        if set(attrs) != set(self.names):
            raise ConfigError(f"candidate {candidate.id} does not assign every schema attribute")
        for name, value in attrs.items():
            if value not in self.values(name):
                raise ConfigError(f"candidate {candidate.id}: {value!r} is not a legal {name}")

    def to_dict(self) -> dict:
        return {"attributes": [[name, list(values)] for name, values in self.attributes]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "AttributeSchema":
        return cls(tuple((name, tuple(values)) for name, values in data["attributes"]))


@dataclass(frozen=True)
class Candidate:
    """One identifiable target: a number, a character row, or an annotated image.

    Exactly one payload form is populated: ``number`` for numeric candidates,
    ``attributes`` for tabular ones, and ``attributes`` + ``embedding_ref``
    for images.
    """

    id: str
    number: Optional[int] = None
    attributes: Optional[Mapping[str, str]] = None
    embedding_ref: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.number is None) == (self.attributes is None):
            raise ConfigError(f"candidate {self.id}: exactly one of number/attributes required")
        if self.embedding_ref is not None and self.attributes is None:
            raise ConfigError(f"candidate {self.id}: embedding_ref requires an attribute map")
        if self.attributes is not None and not isinstance(self.attributes, dict):
            object.__setattr__(self, "attributes", dict(self.attributes))

    @property
    def kind(self) -> str:
        if self.number is not None:
            return "number"
        return "image" if self.embedding_ref is not None else "tabular"

    def to_dict(self) -> dict:
        out: dict = {"id": self.id}
        if self.number is not None:
            out["number"] = self.number
        if self.attributes is not None:
            out["attributes"] = dict(self.attributes)
        if self.embedding_ref is not None:
            out["embedding_ref"] = self.embedding_ref
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Candidate":
        return cls(
            id=data["id"],
            number=data.get("number"),
            attributes=dict(data["attributes"]) if "attributes" in data else None,
            embedding_ref=data.get("embedding_ref"),
        )


def check_unique_ids(candidates: Iterable[Candidate]) -> None:
    seen: set[str] = set()
    for c in candidates:
        if c.id in seen:
            raise ConfigError(f"duplicate candidate id {c.id!r}")
        seen.add(c.id)


# ---------------------------------------------------------------------------
# Questions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributeQuery:
    attribute: str
    value: str


@dataclass(frozen=True)
class NumericComparison:
    op: str  # one of < <= > >=
    threshold: int

    _OPS = ("<", "<=", ">", ">=")

    def __post_init__(self) -> None:
        if self.op not in self._OPS:
            raise ConfigError(f"unknown comparison op {self.op!r}")


@dataclass(frozen=True)
class Parity:
    kind: str  # odd | even

    def __post_init__(self) -> None:
        if self.kind not in ("odd", "even"):
            raise ConfigError(f"unknown parity {self.kind!r}")


@dataclass(frozen=True)
class KeywordQuery:
    keyword: str


@dataclass(frozen=True)
class Guess:
    candidate_id: str


@dataclass(frozen=True)
class FreeText:
    text: str


Question = Union[AttributeQuery, NumericComparison, Parity, KeywordQuery, Guess, FreeText]

_QUESTION_TYPES = {
    "attribute": AttributeQuery,
    "comparison": NumericComparison,
    "parity": Parity,
    "keyword": KeywordQuery,
    "guess": Guess,
    "free_text": FreeText,
}
_QUESTION_TAGS = {cls: tag for tag, cls in _QUESTION_TYPES.items()}


def question_to_dict(question: Question) -> dict:
    tag = _QUESTION_TAGS[type(question)]
    out = {"type": tag}
    out.update(vars(question))
    return out


def question_from_dict(data: Mapping) -> Question:
    payload = {k: v for k, v in data.items() if k != "type"}
    return _QUESTION_TYPES[data["type"]](**payload)


def question_text(question: Question, schema: Optional[AttributeSchema] = None) -> str:
    """Render a question as the English line shown in transcripts and the UI."""
    if isinstance(question, AttributeQuery):
        attr = question.attribute.replace("_", " ")
        if schema is not None and schema.has_attribute(question.attribute) and schema.is_binary(question.attribute):
            return f"Does the target have the trait: {attr}?" if question.value == "yes" else f"Does the target lack the trait: {attr}?"
        return f"Is the target's {attr} {question.value}?"
    if isinstance(question, NumericComparison):
        return f"Is the number {question.op} {question.threshold}?"
    if isinstance(question, Parity):
        return f"Is the number {question.kind}?"
    if isinstance(question, KeywordQuery):
        return f"Does this apply: {question.keyword}?"
    if isinstance(question, Guess):
        return f"Is it {question.candidate_id}?"
    return question.text


def compile_predicate(
    question: Question,
    schema: Optional[AttributeSchema] = None,
):
    """Build a candidate -> Optional[bool] predicate with dispatch done once.

    The hot loops (partitioning, filtering, pool scoring) call the returned
    closure per candidate instead of re-dispatching on the question type.
    """
    if isinstance(question, Guess):
        target = question.candidate_id
        return lambda c: c.id == target
    if isinstance(question, AttributeQuery):
        attribute, value = question.attribute, question.value
        return lambda c: (
            None
            if c.attributes is None or attribute not in c.attributes
            else c.attributes[attribute] == value
        )
    if isinstance(question, NumericComparison):
        threshold = question.threshold
        op = question.op
        if op == "<":
            return lambda c: None if c.number is None else c.number < threshold
        if op == "<=":
            return lambda c: None if c.number is None else c.number <= threshold
        if op == ">":
            return lambda c: None if c.number is None else c.number > threshold
        return lambda c: None if c.number is None else c.number >= threshold
    if isinstance(question, Parity):
        want = 1 if question.kind == "odd" else 0
        return lambda c: None if c.number is None else c.number % 2 == want
    if isinstance(question, KeywordQuery) and schema is not None:
        grounded = schema.ground_keyword(question.keyword)
        if grounded is not None:
            return compile_predicate(AttributeQuery(*grounded), schema)
    return lambda c: None


def evaluate_question(
    question: Question,
    candidate: Candidate,
    schema: Optional[AttributeSchema] = None,
) -> Optional[bool]:
    """Truth value of a question for one candidate; None when undefined.

    KeywordQuery is defined only when the keyword grounds to a schema
    (attribute, value) pair; FreeText is never defined here.
    """
    return compile_predicate(question, schema)(candidate)


# ---------------------------------------------------------------------------
# Dialogue history
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Turn:
    question: Question
    answer: Answer
    feedback_text: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "question": question_to_dict(self.question),
            "answer": self.answer.value,
            "feedback": self.feedback_text,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Turn":
        return cls(
            question=question_from_dict(data["question"]),
            answer=Answer(data["answer"]),
            feedback_text=data.get("feedback"),
        )


@dataclass(frozen=True)
class DialogueHistory:
    turns: tuple[Turn, ...] = ()

    def __len__(self) -> int:
        return len(self.turns)

    def to_dict(self) -> dict:
        return {"turns": [t.to_dict() for t in self.turns]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DialogueHistory":
        return cls(tuple(Turn.from_dict(t) for t in data["turns"]))


def append_turn(
    history: DialogueHistory,
    question: Question,
    answer: Answer,
    feedback: Optional[str] = None,
    t_max: Optional[int] = None,
) -> DialogueHistory:
    """Return a new history with one appended turn; the original is untouched."""
    if t_max is not None and len(history) >= t_max:
        raise TurnBudgetExceeded(f"history already holds {len(history)} turns (budget {t_max})")
    return DialogueHistory(history.turns + (Turn(question, answer, feedback),))


# ---------------------------------------------------------------------------
# Retrieval feedback rendering
# ---------------------------------------------------------------------------


class FeedbackKind(str, Enum):
    NONE = "none"
    DISTRIBUTION = "distribution"
    TOP_K = "top_k"


@dataclass(frozen=True)
class FeedbackMode:
    kind: FeedbackKind = FeedbackKind.NONE
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is FeedbackKind.TOP_K and (self.k is None or self.k < 1):
            raise ConfigError("top_k feedback needs k >= 1")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.k is not None:
            out["k"] = self.k
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "FeedbackMode":
        return cls(FeedbackKind(data["kind"]), data.get("k"))


@dataclass(frozen=True)
class TabularResult:
    """Surviving candidate set after filtering, with its schema when one exists."""

    candidates: tuple[Candidate, ...]
    schema: Optional[AttributeSchema] = None


@dataclass(frozen=True)
class RankingResult:
    """Ranked (id, score) pairs plus candidate payloads for summaries."""

    ranking: tuple[tuple[str, float], ...]
    candidates: Mapping[str, Candidate]


def _candidate_summary(candidate: Candidate) -> str:
    if candidate.number is not None:
        return str(candidate.number)
    positives = [
        name.replace("_", " ")
        for name, value in candidate.attributes.items()
        if value == "yes"
    ]
    if positives:
        return ", ".join(positives)
    return ", ".join(f"{v} {k}".replace("_", " ") for k, v in candidate.attributes.items())


def render_feedback(result: Union[TabularResult, RankingResult], mode: FeedbackMode) -> str:
    """Deterministic text rendering of the retrieval output.

    Distribution mode prints per-attribute value counts of the surviving set
    in schema order ("gender: male=18, female=18"); numeric sets print their
    count and range. TopK mode prints the top K ranked ids with summaries.
    Identical inputs give byte-identical output.
    """
    if mode.kind is FeedbackKind.NONE:
        raise ConfigError("render_feedback called with feedback disabled")

    if mode.kind is FeedbackKind.DISTRIBUTION:
        if not isinstance(result, TabularResult):
            raise ConfigError("distribution feedback needs a filtered candidate set")
        cands = result.candidates
        if not cands:
            return "no candidates remain"
        if result.schema is None:
            numbers = sorted(c.number for c in cands)
            return f"count={len(numbers)}, min={numbers[0]}, max={numbers[-1]}"
        rows = []
        for name, values in result.schema.attributes:
            counts = {v: 0 for v in values}
            for c in cands:
                counts[c.attributes[name]] += 1
            cells = ", ".join(f"{v}={counts[v]}" for v in values)
            rows.append(f"{name.replace('_', ' ')}: {cells}")
        return "\n".join(rows)

    if not isinstance(result, RankingResult):
        raise ConfigError("top_k feedback needs a ranked list")
    lines = []
    for pos, (cid, _score) in enumerate(result.ranking[: mode.k], start=1):
        summary = _candidate_summary(result.candidates[cid]) if cid in result.candidates else ""
        lines.append(f"{pos}. {cid}: {summary}" if summary else f"{pos}. {cid}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Session configuration
# ---------------------------------------------------------------------------


class TerminationKind(str, Enum):
    SINGLETON = "singleton"
    EXPLICIT_GUESS = "explicit_guess"
    RANK_AT_MOST = "rank_at_most"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind = TerminationKind.SINGLETON
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is TerminationKind.RANK_AT_MOST and (self.k is None or self.k < 1):
            raise ConfigError("rank_at_most termination needs k >= 1")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.k is not None:
            out["k"] = self.k
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "Termination":
        return cls(TerminationKind(data["kind"]), data.get("k"))


@dataclass(frozen=True)
class RewardParams:
    """Trajectory-reward constants: success bonus, length penalty and soft penalty."""

    kappa: float = 2.0
    alpha: float = 0.7
    t_max: int = 16
    soft_penalty: float = -0.25
    image_log_base: str = "natural"  # natural | base2

    def __post_init__(self) -> None:
        if self.kappa <= 0:
            raise ConfigError("kappa must be > 0")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if not (-0.5 < self.soft_penalty < 0):
            raise ConfigError("soft_penalty must lie in (-0.5, 0)")
        if self.image_log_base not in ("natural", "base2"):
            raise ConfigError("image_log_base must be 'natural' or 'base2'")

    @property
    def log(self):
        return math.log if self.image_log_base == "natural" else math.log2

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "alpha": self.alpha,
            "t_max": self.t_max,
            "soft_penalty": self.soft_penalty,
            "image_log_base": self.image_log_base,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RewardParams":
        return cls(**data)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Which task to instantiate, plus its parameters.

    kind: guess_number | guess_who | image. Numeric windows are 100
    consecutive integers starting at window_start (inside [0, 1000]);
    image environments load an embedding store and annotation file.
    """

    kind: str
    window_start: Optional[int] = None
    store_path: Optional[str] = None
    annotations_path: Optional[str] = None
    keywords_path: Optional[str] = None
    success_rank: int = 5

    def __post_init__(self) -> None:
        if self.kind not in ("guess_number", "guess_who", "image"):
            raise ConfigError(f"unknown environment kind {self.kind!r}")
        if self.window_start is not None and not (0 <= self.window_start <= 900):
            raise ConfigError("window_start must keep the 100-length window inside [0, 1000]")
        if self.success_rank < 1:
            raise ConfigError("success_rank must be >= 1")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.window_start is not None:
            out["window_start"] = self.window_start
        if self.store_path is not None:
            out["store_path"] = self.store_path
        if self.annotations_path is not None:
            out["annotations_path"] = self.annotations_path
        if self.keywords_path is not None:
            out["keywords_path"] = self.keywords_path
        if self.kind == "image":
            out["success_rank"] = self.success_rank
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "EnvironmentSpec":
        return cls(**data)


@dataclass(frozen=True)
class SessionConfig:
    environment: EnvironmentSpec
    t_max: int = 16
    termination: Termination = Termination()
    feedback: FeedbackMode = FeedbackMode()
    rewards: RewardParams = RewardParams()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if self.termination.kind is TerminationKind.RANK_AT_MOST and self.environment.kind != "image":
            raise ConfigError("rank_at_most termination applies only to image environments")
        if self.feedback.kind is FeedbackKind.TOP_K and self.environment.kind != "image":
            raise ConfigError("top_k feedback needs a ranking environment")
        if self.rewards.t_max != self.t_max:
            object.__setattr__(self, "rewards", replace(self.rewards, t_max=self.t_max))

    def to_dict(self) -> dict:
        return {
            "environment": self.environment.to_dict(),
            "t_max": self.t_max,
            "termination": self.termination.to_dict(),
            "feedback": self.feedback.to_dict(),
            "rewards": self.rewards.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "SessionConfig":
        return cls(
            environment=EnvironmentSpec.from_dict(data["environment"]),
            t_max=data.get("t_max", 16),
            termination=Termination.from_dict(data["termination"]) if "termination" in data else Termination(),
            feedback=FeedbackMode.from_dict(data["feedback"]) if "feedback" in data else FeedbackMode(),
            rewards=RewardParams.from_dict(data["rewards"]) if "rewards" in data else RewardParams(),
            seed=data.get("seed", 0),
        )


# ---------------------------------------------------------------------------
# Episode records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EpisodeRecord:
    """Full trajectory of one episode plus its scores and terminal reward."""

    config: SessionConfig
    target_id: str
    turns: DialogueHistory
    step_scores: tuple[float, ...]
    success: bool
    turn_count: int
    trajectory_reward: float
    seed: int
    rank_trace: Optional[tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if not (len(self.step_scores) == self.turn_count == len(self.turns)):
            raise ConfigError("step_scores, turn_count and turns must agree")
        if not self.success and self.trajectory_reward != -self.config.rewards.kappa:
            raise ConfigError("failed episodes must carry reward -kappa")

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "target_id": self.target_id,
            "turns": self.turns.to_dict(),
            "step_scores": list(self.step_scores),
            "success": self.success,
            "turn_count": self.turn_count,
            "trajectory_reward": self.trajectory_reward,
            "seed": self.seed,
            "rank_trace": list(self.rank_trace) if self.rank_trace is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EpisodeRecord":
        return cls(
            config=SessionConfig.from_dict(data["config"]),
            target_id=data["target_id"],
            turns=DialogueHistory.from_dict(data["turns"]),
            step_scores=tuple(data["step_scores"]),
            success=data["success"],
            turn_count=data["turn_count"],
            trajectory_reward=data["trajectory_reward"],
            seed=data["seed"],
            rank_trace=tuple(data["rank_trace"]) if data.get("rank_trace") is not None else None,
        )

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "EpisodeRecord":
        return cls.from_dict(json.loads(line))


def write_episodes_jsonl(episodes: Sequence[EpisodeRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(ep.to_json_line() + "\n")


def read_episodes_jsonl(path) -> list[EpisodeRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [EpisodeRecord.from_json_line(line) for line in fh if line.strip()]
