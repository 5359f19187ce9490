"""Synthetic dialogue generation for training-data export.

Greedy near-optimal dialogues for the numeric and character tasks, the
attribute-annotation dialogue builder for image corpora, and trajectory
unfolding into per-turn training instances.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .core import (
    Answer,
    AttributeQuery,
    AttributeSchema,
    Candidate,
    Guess,
    Question,
    compile_predicate,
    evaluate_question,
    question_text,
)
from .entropy import eig_from_counts
from .environments import guess_who_dataset
from .errors import ConfigError, ParaphraserUnavailable
from .policies import attribute_question_pool, numeric_question_pool


@dataclass(frozen=True)
class SynthConfig:
    """Dialogue count, sampling tolerance, guessing threshold and budget."""

    dialogues: int = 1000
    tau: float = 1e-4
    t_max: int = 16
    guess_threshold: int = 2
    seed: int = 0
    fixed_board: bool = False
    paraphraser: Optional[Callable[[str], str]] = None

    def __post_init__(self) -> None:
        if self.dialogues < 1:
            raise ConfigError("dialogues must be >= 1")


@dataclass(frozen=True)
class SynthTurn:
    question: Question
    text: str
    answer: Answer

    def to_dict(self) -> dict:
        return {"question": self.text, "answer": self.answer.value}


@dataclass(frozen=True)
class Trajectory:
    dialogue_id: str
    kind: str
    target_id: str
    turns: tuple[SynthTurn, ...]
    initial_candidates: Optional[tuple[Candidate, ...]] = None

    def __len__(self) -> int:
        return len(self.turns)


def _paraphrase(text: str, paraphraser: Optional[Callable[[str], str]]) -> str:
    if paraphraser is None:
        return text
    try:
        return paraphraser(text)
    except Exception as exc:  # noqa: BLE001 - surface any client failure uniformly
        raise ParaphraserUnavailable(f"paraphraser failed: {exc}") from exc


def _near_optimal_choice(
    candidates: Sequence[Candidate],
    pool: Sequence[Question],
    tau: float,
    rng: random.Random,
    schema: Optional[AttributeSchema] = None,
) -> Question:
    """Greedy EIG selection with uniform sampling inside the tolerance band."""
    scored = []
    for q in pool:
        predicate = compile_predicate(q, schema)
        n_yes = sum(1 for c in candidates if predicate(c))
        scored.append((q, eig_from_counts(n_yes, len(candidates) - n_yes)))
    best = max(score for _, score in scored)
    near = [q for q, score in scored if best - score <= tau]
    return rng.choice(near)


def _filter(candidates, question, holds: bool, schema=None):
    predicate = compile_predicate(question, schema)
    return tuple(c for c in candidates if bool(predicate(c)) == holds)


def synth_guess_number(config: SynthConfig) -> list[Trajectory]:
    """Greedy binary-search dialogues over random integer intervals.

    Each dialogue draws an interval of 100-300 integers starting in
    [100, 500], asks near-optimal median-template questions, and switches
    to guessing once at most two candidates survive; wrong guesses are
    eliminated and the dialogue continues.
    """
    rng = random.Random(f"synth-number|{config.seed}")
    out: list[Trajectory] = []
    for m in range(config.dialogues):
        start = rng.randint(100, 500)
        length = rng.randint(100, 300)
        pool_candidates = tuple(Candidate(id=str(n), number=n) for n in range(start, start + length))
        target = rng.choice(pool_candidates)
        remaining = pool_candidates
        turns: list[SynthTurn] = []
        while len(turns) < config.t_max:
            if len(remaining) <= config.guess_threshold:
                guessed = rng.choice(remaining)
                question = Guess(guessed.id)
                if guessed.id == target.id:
                    turns.append(SynthTurn(question, question_text(question), Answer.YES))
                    break
                turns.append(SynthTurn(question, question_text(question), Answer.NO))
                remaining = tuple(c for c in remaining if c.id != guessed.id)
                continue
            question = _near_optimal_choice(remaining, numeric_question_pool(remaining), config.tau, rng)
            holds = bool(_holds(question, target))
            turns.append(SynthTurn(question, question_text(question), Answer.YES if holds else Answer.NO))
            remaining = _filter(remaining, question, holds)
        out.append(
            Trajectory(
                f"number-{config.seed}-{m:05d}",
                "guess_number",
                target.id,
                tuple(turns),
                initial_candidates=pool_candidates,
            )
        )
    return out


def _holds(question: Question, target: Candidate, schema=None) -> bool:
    verdict = evaluate_question(question, target, schema)
    if verdict is None:
        raise ConfigError(f"question has no truth value for the target: {question}")
    return verdict


def random_character_board(
    schema: AttributeSchema,
    rng: random.Random,
    size: int = 36,
) -> tuple[Candidate, ...]:
    """Sample `size` distinct characters, each attribute value drawn uniformly.

    Full-row duplicates are resampled so every board candidate is unique.
    """
    rows: set[tuple[str, ...]] = set()
    board: list[Candidate] = []
    while len(board) < size:
        row = tuple(rng.choice(values) for _, values in schema.attributes)
        if row in rows:
            continue
        rows.add(row)
        cid = f"C{len(board) + 1:02d}"
        board.append(Candidate(id=cid, attributes=dict(zip(schema.names, row))))
    return tuple(board)


def synth_guess_who(config: SynthConfig) -> list[Trajectory]:
    """Greedy near-optimal character dialogues over freshly sampled boards.

    Per dialogue: sample a 36-character board (or reuse the embedded one)
    and ask the highest-EIG unasked attribute-value question each turn.
    Once at most `guess_threshold` candidates survive the dialogue enters
    the guessing phase: random guesses among the survivors, wrong guesses
    eliminated, until the target is identified. Question text goes through
    the configured paraphraser.
    """
    schema, fixed_characters = guess_who_dataset()
    rng = random.Random(f"synth-who|{config.seed}")
    out: list[Trajectory] = []
    for m in range(config.dialogues):
        board = fixed_characters if config.fixed_board else random_character_board(schema, rng)
        target = rng.choice(board)
        remaining = board
        asked: set[Question] = set()
        turns: list[SynthTurn] = []
        while len(turns) < config.t_max:
            if len(remaining) <= config.guess_threshold:
                guessed = rng.choice(remaining)
                question = Guess(guessed.id)
                if guessed.id == target.id:
                    turns.append(SynthTurn(question, question_text(question), Answer.YES))
                    break
                turns.append(SynthTurn(question, question_text(question), Answer.NO))
                remaining = tuple(c for c in remaining if c.id != guessed.id)
                continue
            pool = [q for q in attribute_question_pool(schema) if q not in asked]
            question = _near_optimal_choice(remaining, pool, config.tau, rng, schema)
            asked.add(question)
            text = _paraphrase(question_text(question, schema), config.paraphraser)
            holds = _holds(question, target, schema)
            turns.append(SynthTurn(question, text, Answer.YES if holds else Answer.NO))
            remaining = _filter(remaining, question, holds, schema)
        out.append(
            Trajectory(
                f"who-{config.seed}-{m:05d}",
                "guess_who",
                target.id,
                tuple(turns),
                initial_candidates=board,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Attribute-annotation dialogues
# ---------------------------------------------------------------------------


def default_question_templates(attributes: Sequence[str]) -> dict[str, tuple[str, str, str]]:
    """Three deterministic phrasings per attribute name."""
    out = {}
    for name in attributes:
        words = name.replace("_", " ").lower()
        out[name] = (
            f"Does the person have {words}?",
            f"Is {words} one of their traits?",
            f"Would you say the photo shows {words}?",
        )
    return out


@dataclass(frozen=True)
class AttributeDialogueConfig:
    """Positive-attribute cap, per-attribute phrasings, and related groups."""

    max_positive: int = 20
    question_templates: Mapping[str, tuple[str, str, str]] = field(default_factory=dict)
    related_groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        for name, templates in self.question_templates.items():
            if len(templates) != 3:
                raise ConfigError(f"attribute {name!r} needs exactly 3 question templates")
        seen: set[str] = set()
        for group in self.related_groups:
            for name in group:
                if name in seen:
                    raise ConfigError(f"attribute {name!r} appears in two related groups")
                seen.add(name)

    def templates_for(self, attribute: str) -> tuple[str, str, str]:
        if attribute in self.question_templates:
            return self.question_templates[attribute]
        return default_question_templates([attribute])[attribute]

    def group_of(self, attribute: str) -> Optional[tuple[str, ...]]:
        for group in self.related_groups:
            if attribute in group:
                return group
        return None


def synth_attribute_dialogues(
    annotations: Mapping[str, Mapping[str, int]],
    config: AttributeDialogueConfig,
    rng: random.Random,
) -> list[Trajectory]:
    """Build yes/no dialogues from binary attribute annotations.

    Images with more than max_positive positive attributes are skipped.
    Positive questions arrive shuffled; between 0 and 20-m negatives are
    mixed in, and a negative related to some positive attribute is always
    placed before that positive question.
    """
    out: list[Trajectory] = []
    for image_id in sorted(annotations):
        attrs = annotations[image_id]
        positives = sorted(name for name, v in attrs.items() if v == 1)
        negatives = sorted(name for name, v in attrs.items() if v != 1)
        m = len(positives)
        if m > config.max_positive:
            continue

        def make_turn(name: str, positive: bool) -> SynthTurn:
            text = rng.choice(config.templates_for(name))
            return SynthTurn(
                AttributeQuery(name, "yes"),
                text,
                Answer.YES if positive else Answer.NO,
            )

        ordered = [make_turn(name, True) for name in rng.sample(positives, m)]
        budget = config.max_positive - m
        x = rng.randint(0, budget) if budget > 0 else 0
        chosen_negatives = rng.sample(negatives, min(x, len(negatives)))
        positive_groups = {name: config.group_of(name) for name in positives}
        for negative in chosen_negatives:
            group = config.group_of(negative)
            related_position = None
            if group is not None:
                for index, turn in enumerate(ordered):
                    attr = turn.question.attribute
                    if turn.answer is Answer.YES and positive_groups.get(attr) == group:
                        related_position = index
                        break
            if related_position is not None:
                insert_at = rng.randint(0, related_position)
            else:
                insert_at = rng.randint(0, len(ordered))
            ordered.insert(insert_at, make_turn(negative, False))
        out.append(Trajectory(f"attr-{image_id}", "image", image_id, tuple(ordered)))
    return out


# ---------------------------------------------------------------------------
# Unfolding and export
# ---------------------------------------------------------------------------


def unfold(trajectory: Trajectory) -> list[dict]:
    """Expand an n-turn dialogue into n training instances.

    Instance i holds the full history before turn i plus that turn's
    question and answer as the prediction target.
    """
    instances = []
    for index, turn in enumerate(trajectory.turns):
        instances.append(
            {
                "dialogue_id": trajectory.dialogue_id,
                "turn_index": index,
                "history": [t.to_dict() for t in trajectory.turns[:index]],
                "next_question": turn.text,
                "answer": turn.answer.value,
            }
        )
    return instances


def truncate_random_prefix(trajectory: Trajectory, rng: random.Random) -> Trajectory:
    """Keep a random non-empty prefix of the dialogue's rounds."""
    if len(trajectory) <= 1:
        return trajectory
    keep = rng.randint(1, len(trajectory))
    return Trajectory(trajectory.dialogue_id, trajectory.kind, trajectory.target_id, trajectory.turns[:keep])


def export_instances_jsonl(
    trajectories: Sequence[Trajectory],
    path,
    random_round_retention: bool = False,
    rng: Optional[random.Random] = None,
) -> int:
    """Write unfolded training instances as JSONL; returns the instance count."""
    if random_round_retention and rng is None:
        raise ConfigError("random round retention needs an rng")
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for trajectory in trajectories:
            if random_round_retention:
                trajectory = truncate_random_prefix(trajectory, rng)
            for instance in unfold(trajectory):
                fh.write(json.dumps(instance, sort_keys=True, separators=(",", ":")) + "\n")
                count += 1
    return count


class HttpParaphraser:
    """JSON-over-HTTP paraphrase client: POST {question} -> {paraphrase}."""

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, question: str) -> str:
        import httpx

        try:
            response = httpx.post(self.endpoint, json={"question": question}, timeout=self.timeout)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ParaphraserUnavailable(f"paraphraser unreachable: {exc}") from exc
        return str(response.json()["paraphrase"])
