"""Exact uncertainty accounting over finite candidate sets.

Shannon entropy of a belief, deterministic partitioning of a candidate set
by a question, and the expected information gain of asking it. All values
are in bits; answer probabilities assume a uniform prior over candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import AttributeSchema, Candidate, Question, compile_predicate, question_text
from .errors import EmptySupport, UnanswerableQuestion


@dataclass(frozen=True)
class Belief:
    """Probability distribution over candidate ids (uniform by default)."""

    support: tuple[str, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probabilities):
            raise ValueError("support and probabilities must have equal length")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be non-negative")
        if self.support and abs(math.fsum(self.probabilities) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def uniform(cls, support: Sequence[str]) -> "Belief":
        n = len(support)
        if n == 0:
            raise EmptySupport("cannot build a belief over an empty support")
        return cls(tuple(support), tuple(1.0 / n for _ in range(n)))


@dataclass(frozen=True)
class Partition:
    """Split of a candidate set by a question's truth value, with answer probabilities."""

    yes_ids: tuple[str, ...]
    no_ids: tuple[str, ...]
    p_yes: float
    p_no: float

    @property
    def n_yes(self) -> int:
        return len(self.yes_ids)

    @property
    def n_no(self) -> int:
        return len(self.no_ids)


def entropy(belief: Belief) -> float:
    """Shannon entropy -sum p*log2(p) in bits, with 0*log2(0) taken as 0."""
    if not belief.support:
        raise EmptySupport("entropy of an empty support is undefined")
    return -math.fsum(p * math.log2(p) for p in belief.probabilities if p > 0.0)


def partition(
    candidates: Sequence[Candidate],
    question: Question,
    schema: Optional[AttributeSchema] = None,
) -> Partition:
    """Assign every candidate to the yes or no side of a structured question.

    Raises UnanswerableQuestion when the question has no defined truth value
    for some candidate (free text, or a keyword that grounds to nothing).
    """
    predicate = compile_predicate(question, schema)
    yes: list[str] = []
    no: list[str] = []
    for c in candidates:
        verdict = predicate(c)
        if verdict is None:
            raise UnanswerableQuestion(
                f"no defined truth value for candidate {c.id}: {question_text(question)}"
            )
        (yes if verdict else no).append(c.id)
    n = len(candidates)
    if n == 0:
        raise EmptySupport("cannot partition an empty candidate set")
    p_yes = len(yes) / n
    return Partition(tuple(yes), tuple(no), p_yes, 1.0 - p_yes)


def eig_from_counts(n_yes: int, n_no: int) -> float:
    """Expected information gain from raw subset sizes under a uniform prior.

    Empty-side terms contribute 0, so a question no candidate (or every
    candidate) answers yes to carries exactly 0 bits.
    """
    n = n_yes + n_no
    if n == 0:
        raise EmptySupport("cannot score a question over an empty candidate set")
    value = math.log2(n)
    if n_yes:
        value -= (n_yes / n) * math.log2(n_yes)
    if n_no:
        value -= (n_no / n) * math.log2(n_no)
    return value


def eig(
    candidates: Sequence[Candidate],
    question: Question,
    schema: Optional[AttributeSchema] = None,
) -> float:
    """Expected information gain of asking `question` on `candidates`, in bits."""
    part = partition(candidates, question, schema)
    return eig_from_counts(part.n_yes, part.n_no)


def eig_all(
    candidates: Sequence[Candidate],
    pool: Sequence[Question],
    schema: Optional[AttributeSchema] = None,
) -> list[tuple[Question, float]]:
    """Score every pool question, sorted by EIG descending (stable: ties keep pool order)."""
    scored = [(q, eig(candidates, q, schema)) for q in pool]
    return sorted(scored, key=lambda pair: -pair[1])
