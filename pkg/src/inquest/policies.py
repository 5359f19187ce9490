"""Question-selection policies.

The oracle exhaustively scores a question pool and samples uniformly among
the near-optimal set; replay policies re-emit recorded scripts; the
external questioner forwards the augmented history to an HTTP policy and
parses its reply.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    AttributeQuery,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    FreeText,
    Guess,
    KeywordQuery,
    NumericComparison,
    Parity,
    Question,
)
from .entropy import eig_all
from .errors import ClientTimeout, ConfigError, ExhaustedPool, ExhaustedScript, UnparseableQuestion


@dataclass(frozen=True)
class OracleConfig:
    """Near-optimal tolerance, guessing threshold, and the question pool kind."""

    tau: float = 1e-4
    guess_threshold: int = 2
    pool: str = "attribute_values"  # attribute_values | numeric_templates | custom
    custom_pool: tuple[Question, ...] = ()

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ConfigError("tau must be >= 0")
        if self.guess_threshold < 1:
            raise ConfigError("guess_threshold must be >= 1")
        if self.pool not in ("attribute_values", "numeric_templates", "custom"):
            raise ConfigError(f"unknown pool kind {self.pool!r}")
        if self.pool == "custom" and not self.custom_pool:
            raise ConfigError("custom pool must not be empty")


def numeric_question_pool(candidates: Sequence[Candidate]) -> list[Question]:
    """Six templates: parity plus the four comparisons at the surviving median.

    Even-sized sets use the lower middle element as the median, which makes
    the <=-median split exactly balanced.
    """
    numbers = sorted(c.number for c in candidates)
    if not numbers:
        return []
    median = numbers[(len(numbers) - 1) // 2]
    return [
        Parity("odd"),
        Parity("even"),
        NumericComparison("<", median),
        NumericComparison("<=", median),
        NumericComparison(">", median),
        NumericComparison(">=", median),
    ]


def attribute_question_pool(schema: AttributeSchema) -> list[Question]:
    """Every single (attribute, value) question the schema permits."""
    return [
        AttributeQuery(name, value)
        for name, values in schema.attributes
        for value in values
    ]


def oracle_next_question(
    candidates: Sequence[Candidate],
    config: OracleConfig,
    rng: random.Random,
    asked: Sequence[Question] = (),
    schema: Optional[AttributeSchema] = None,
    allow_guess: bool = True,
) -> Question:
    """Pick a question within tau of the pool's maximum EIG, uniformly at random.

    With guessing enabled, a pool question is only asked while more than
    guess_threshold candidates survive; below that the oracle guesses a
    random survivor. Previously asked questions are excluded by equality.
    """
    if allow_guess and len(candidates) <= config.guess_threshold:
        return Guess(rng.choice([c.id for c in candidates]))
    if len(candidates) < 2:
        raise ConfigError("oracle needs at least 2 candidates to ask about")

    if config.pool == "attribute_values":
        if schema is None:
            raise ConfigError("attribute_values pool needs a schema")
        pool = attribute_question_pool(schema)
    elif config.pool == "numeric_templates":
        pool = numeric_question_pool(candidates)
    else:
        pool = list(config.custom_pool)
    asked_set = set(asked)
    pool = [q for q in pool if q not in asked_set]
    if not pool:
        raise ExhaustedPool("every pool question was already asked")

    scored = eig_all(candidates, pool, schema)
    best_score = scored[0][1]
    if best_score <= 0.0:
        raise ExhaustedPool("every remaining pool question has zero information gain")
    near_optimal = [q for q, score in scored if best_score - score <= config.tau]
    return rng.choice(near_optimal)


class OraclePolicy:
    """Stateful per-episode oracle: tracks asked questions, never repeats one."""

    def __init__(
        self,
        config: OracleConfig,
        schema: Optional[AttributeSchema] = None,
        allow_guess: bool = True,
    ) -> None:
        self.config = config
        self.schema = schema
        self.allow_guess = allow_guess
        self.asked: list[Question] = []

    def next_question(
        self,
        candidates: Sequence[Candidate],
        history: DialogueHistory,
        rng: random.Random,
    ) -> Question:
        question = oracle_next_question(
            candidates,
            self.config,
            rng,
            asked=self.asked,
            schema=self.schema,
            allow_guess=self.allow_guess,
        )
        if not isinstance(question, Guess):
            self.asked.append(question)
        return question


class ReplayPolicy:
    """Emit a recorded question script in order; raises once it runs dry."""

    def __init__(self, script: Sequence[Question]) -> None:
        self.script = tuple(script)
        self.position = 0

    def next_question(self, candidates, history, rng) -> Question:
        if self.position >= len(self.script):
            raise ExhaustedScript(f"script of {len(self.script)} questions exhausted")
        question = self.script[self.position]
        self.position += 1
        return question


_QUESTION_PREFIXES = (
    r"is\s+the\s+(?:person|target|character|image|number)\s+wearing",
    r"does\s+the\s+(?:person|target|character|image)\s+(?:have|wear)",
    r"is\s+the\s+(?:person|target|character|image)(?:'s)?",
    r"is\s+(?:it|there)",
    r"does\s+(?:it|this)\s+(?:have|show)",
    r"are\s+(?:they|there)",
)


def parse_question_text(text: str) -> Question:
    """Rule-based reduction of an English yes/no question to a keyword query.

    Strips common interrogative scaffolding and keeps the content phrase;
    anything that still reads like a sentence falls back to free text.
    """
    cleaned = text.strip().rstrip("?").strip()
    if not cleaned:
        raise UnparseableQuestion("empty question text")
    lowered = cleaned.lower()
    for prefix in _QUESTION_PREFIXES:
        match = re.match(prefix + r"\s+(.*)", lowered)
        if match and match.group(1):
            phrase = match.group(1).strip()
            phrase = re.sub(r"^(?:a|an|the)\s+", "", phrase)
            if phrase:
                return KeywordQuery(phrase)
    if len(lowered.split()) <= 3:
        return KeywordQuery(lowered)
    return FreeText(cleaned)


class ExternalQuestionerPolicy:
    """HTTP policy client: POST the augmented history, parse the reply text."""

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def next_question(self, candidates, history: DialogueHistory, rng) -> Question:
        import httpx

        from .core import question_text

        payload = {
            "history": [
                {
                    "question": question_text(turn.question),
                    "answer": turn.answer.value,
                    "feedback": turn.feedback_text,
                }
                for turn in history.turns
            ]
        }
        try:
            response = httpx.post(self.endpoint, json=payload, timeout=self.timeout)
            response.raise_for_status()
        except httpx.TimeoutException as exc:
            raise ClientTimeout(f"questioner timed out: {exc}") from exc
        text = str(response.json().get("question_text", ""))
        return parse_question_text(text)
