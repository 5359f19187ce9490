"""Candidate-narrowing machinery.

Deterministic tabular filtering, the keyword-conditioned embedding ranker
with a sigmoid negation discount, and the reciprocal-rank-fusion and
sequential-score-multiplication baselines it is compared against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .core import (
    Answer,
    AttributeQuery,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    FreeText,
    KeywordQuery,
    Question,
    compile_predicate,
    question_text,
)
from .errors import (
    ConfigError,
    InconsistentHistory,
    MismatchedUniverse,
    MissingEmbedding,
    OutOfRangeSimilarity,
    ParserUnavailable,
    UnanswerableQuestion,
)

# ---------------------------------------------------------------------------
# Tabular filtering
# ---------------------------------------------------------------------------


def tabular_filter(
    candidates: Sequence[Candidate],
    question: Question,
    answer: Answer,
    schema: Optional[AttributeSchema] = None,
) -> tuple[Candidate, ...]:
    """Keep the candidates consistent with the answer.

    Yes keeps candidates satisfying the question's predicate, No keeps the
    complement, and CantAnswer never filters (the target must survive).
    Raises InconsistentHistory when the result would be empty.
    """
    if answer is Answer.CANT_ANSWER:
        return tuple(candidates)
    predicate = compile_predicate(question, schema)
    want = answer is Answer.YES
    kept = []
    for c in candidates:
        verdict = predicate(c)
        if verdict is None:
            raise UnanswerableQuestion(
                f"cannot filter on {question_text(question)}: undefined for candidate {c.id}"
            )
        if verdict == want:
            kept.append(c)
    if not kept:
        raise InconsistentHistory(
            f"answer {answer.value!r} to {question_text(question)!r} eliminates every candidate"
        )
    return tuple(kept)


# ---------------------------------------------------------------------------
# Keyword extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeywordSets:
    """Positive and negative keyword lists, deduplicated, first occurrence kept."""

    positives: tuple[str, ...] = ()
    negatives: tuple[str, ...] = ()

    @classmethod
    def build(cls, positives: Sequence[str], negatives: Sequence[str]) -> "KeywordSets":
        pos = list(dict.fromkeys(positives))
        neg = [k for k in dict.fromkeys(negatives) if k not in pos]
        return cls(tuple(pos), tuple(neg))


def _binary_value_flip(schema: Optional[AttributeSchema], question: AttributeQuery) -> tuple[str, bool]:
    """Phrase for an attribute question plus whether its polarity is inverted.

    Asking about the "no" value of a yes/no attribute is the negation of
    asking about "yes", so the phrase stays positive and the answer flips.
    """
    if schema is not None and schema.has_attribute(question.attribute):
        phrase = schema.keyword_phrase(question.attribute, question.value)
        flipped = schema.is_binary(question.attribute) and question.value == "no"
        return phrase, flipped
    phrase = f"{question.value} {question.attribute}".replace("_", " ")
    return phrase, False


def parse_keywords(
    history: DialogueHistory,
    schema: Optional[AttributeSchema] = None,
    free_text_parser: Optional[Callable[[str], Optional[str]]] = None,
) -> KeywordSets:
    """Split the dialogue's keywords by answer polarity.

    Yes-answered keywords land in the positive set, No-answered in the
    negative set; CantAnswer turns contribute nothing. Attribute questions
    render to their schema phrase; free text needs an external parser.
    """
    positives: list[str] = []
    negatives: list[str] = []
    for turn in history.turns:
        if turn.answer is Answer.CANT_ANSWER:
            continue
        q = turn.question
        if isinstance(q, KeywordQuery):
            keyword, flipped = q.keyword, False
        elif isinstance(q, AttributeQuery):
            keyword, flipped = _binary_value_flip(schema, q)
        elif isinstance(q, FreeText):
            if free_text_parser is None:
                raise ParserUnavailable("free-text turn without a configured parser")
            parsed = free_text_parser(q.text)
            if parsed is None:
                continue
            keyword, flipped = parsed, False
        else:
            continue  # guesses and numeric questions carry no keyword
        is_positive = (turn.answer is Answer.YES) != flipped
        (positives if is_positive else negatives).append(keyword)
    return KeywordSets.build(positives, negatives)


# ---------------------------------------------------------------------------
# Embedding store and ranker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateParams:
    """Sigmoid discount gate constants: threshold, steepness and base discount."""

    mu: float = 0.15
    beta: float = 20.0
    d0: float = 0.9

    def __post_init__(self) -> None:
        if not (0.0 < self.d0 < 1.0):
            raise ConfigError("d0 must lie in (0, 1)")
        if self.beta <= 0:
            raise ConfigError("beta must be positive")


def discount_gate(similarity: float, params: GateParams = GateParams()) -> float:
    """Bounded penalty 1 - (1-d0) * sigmoid(beta * (x - mu)), strictly inside (d0, 1)."""
    if not math.isfinite(similarity):
        raise ValueError("similarity must be finite")
    z = params.beta * (similarity - params.mu)
    if z >= 0:
        sigmoid = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        sigmoid = e / (1.0 + e)
    return 1.0 - (1.0 - params.d0) * sigmoid


class EmbeddingStore:
    """Unit-norm image vectors plus a keyword-vector lookup.

    Keyword vectors come from a preloaded table or, when configured, an
    external text embedder called for unseen phrases (including comma-joined
    positive queries).
    """

    def __init__(
        self,
        dimension: int,
        image_vectors: Mapping[str, Sequence[float]],
        keyword_vectors: Optional[Mapping[str, Sequence[float]]] = None,
        text_embedder: Optional[Callable[[list[str]], list[list[float]]]] = None,
    ) -> None:
        if dimension < 1:
            raise ConfigError("dimension must be >= 1")
        self.dimension = dimension
        self._images: dict[str, np.ndarray] = {}
        self._keywords: dict[str, np.ndarray] = {}
        self._embedder = text_embedder
        for image_id, vec in image_vectors.items():
            self._images[image_id] = self._check_vector(vec, f"image {image_id!r}")
        for keyword, vec in (keyword_vectors or {}).items():
            self._keywords[keyword] = self._check_vector(vec, f"keyword {keyword!r}")
        self._ids = tuple(sorted(self._images))
        if self._ids:
            self._matrix = np.stack([self._images[i] for i in self._ids])
        else:
            self._matrix = np.zeros((0, dimension))

    def _check_vector(self, vec: Sequence[float], label: str) -> np.ndarray:
        arr = np.asarray(vec, dtype=float)
        if arr.shape != (self.dimension,):
            raise ConfigError(f"{label}: expected dimension {self.dimension}, got {arr.shape}")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > 1e-6:
            raise ConfigError(f"{label}: vector norm {norm:.8f} is not 1")
        return arr

    @property
    def image_ids(self) -> tuple[str, ...]:
        return self._ids

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._images

    def keyword_vector(self, keyword: str) -> np.ndarray:
        if keyword in self._keywords:
            return self._keywords[keyword]
        if self._embedder is not None:
            (vec,) = self._embedder([keyword])
            arr = np.asarray(vec, dtype=float)
            norm = float(np.linalg.norm(arr))
            if norm == 0:
                raise MissingEmbedding(f"embedder returned a zero vector for {keyword!r}")
            arr = arr / norm
            self._keywords[keyword] = arr
            return arr
        raise MissingEmbedding(f"no vector for keyword {keyword!r}")

    def similarities(self, keyword: str) -> np.ndarray:
        """Cosine similarity of every stored image to the keyword, in id order."""
        return self._matrix @ self.keyword_vector(keyword)


@dataclass(frozen=True)
class RankedList:
    """Total ordering of candidate ids by descending score (ties broken by id)."""

    entries: tuple[tuple[str, float], ...]

    @classmethod
    def from_scores(cls, scores: Mapping[str, float]) -> "RankedList":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(tuple(ordered))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def rank_of(self, candidate_id: str) -> int:
        return target_rank(self, candidate_id)


def target_rank(ranked: RankedList, target_id: str) -> int:
    """1-based position of the target in the ranked list."""
    for pos, (cid, _) in enumerate(ranked.entries, start=1):
        if cid == target_id:
            return pos
    from .errors import UnknownTarget

    raise UnknownTarget(f"target {target_id!r} is not in the ranked list")


def rank_images(
    store: EmbeddingStore,
    keywords: KeywordSets,
    params: GateParams = GateParams(),
) -> RankedList:
    """Score every image by positive-query similarity times its negation discounts.

    With no positive keywords the base scores are all ones, so ordering is
    driven entirely by the negative discounts (and id tie-breaking).
    """
    n = len(store.image_ids)
    if keywords.positives:
        joined = ", ".join(keywords.positives)
        scores = store.similarities(joined)
    else:
        scores = np.ones(n)
    discounts = np.ones(n)
    for negative in keywords.negatives:
        sims = store.similarities(negative)
        with np.errstate(over="ignore"):
            gate = 1.0 - (1.0 - params.d0) / (1.0 + np.exp(-params.beta * (sims - params.mu)))
        discounts = discounts * gate
    final = scores * discounts
    return RankedList.from_scores(dict(zip(store.image_ids, final.tolist())))


# ---------------------------------------------------------------------------
# Fusion baselines
# ---------------------------------------------------------------------------


def rrf_fuse(lists: Sequence[RankedList], k: float = 60.0) -> RankedList:
    """Reciprocal rank fusion: Score(c) = sum over lists of 1 / (k + rank(c))."""
    if not lists:
        raise MismatchedUniverse("rrf_fuse needs at least one ranked list")
    universe = set(lists[0].ids)
    for ranked in lists[1:]:
        if set(ranked.ids) != universe:
            raise MismatchedUniverse("ranked lists cover different candidate sets")
    scores = {cid: 0.0 for cid in universe}
    for ranked in lists:
        for pos, (cid, _) in enumerate(ranked.entries, start=1):
            scores[cid] += 1.0 / (k + pos)
    return RankedList.from_scores(scores)


def ssm_update(
    running_scores: Mapping[str, float],
    turn_pos_sim: Mapping[str, float],
    turn_neg_sim: Mapping[str, float],
) -> dict[str, float]:
    """One sequential-score-multiplication step: running *= pos * (1 - neg).

    Similarities must already be scaled to [0, 1]; the initial running score
    is 1 for every candidate, and a zero turn score is absorbing.
    """
    out: dict[str, float] = {}
    for cid, running in running_scores.items():
        pos = turn_pos_sim.get(cid, 1.0)
        neg = turn_neg_sim.get(cid, 0.0)
        if not (0.0 <= pos <= 1.0) or not (0.0 <= neg <= 1.0):
            raise OutOfRangeSimilarity(f"similarities for {cid!r} must lie in [0, 1]")
        out[cid] = running * pos * (1.0 - neg)
    return out


def minmax_scale(values: Mapping[str, float]) -> dict[str, float]:
    """Scale a per-candidate similarity map to [0, 1]; constant maps become all ones."""
    if not values:
        return {}
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {cid: 1.0 for cid in values}
    return {cid: (v - lo) / (hi - lo) for cid, v in values.items()}


# ---------------------------------------------------------------------------
# File formats and the external embedder client
# ---------------------------------------------------------------------------


def load_store(store_path, keywords_path=None, text_embedder=None) -> EmbeddingStore:
    """Load an embedding store file: a JSON header line, then one {id, vector} per line."""
    with open(store_path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        dimension, count = header["dimension"], header["count"]
        images = {}
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            images[record["id"]] = record["vector"]
    if len(images) != count:
        raise ConfigError(f"store header claims {count} vectors, file holds {len(images)}")
    keywords = None
    if keywords_path is not None:
        keywords = {}
        with open(keywords_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = json.loads(line)
                keywords[record["keyword"]] = record["vector"]
    return EmbeddingStore(dimension, images, keywords, text_embedder)


def save_store(store_path, dimension: int, image_vectors: Mapping[str, Sequence[float]]) -> None:
    with open(store_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dimension": dimension, "count": len(image_vectors)}) + "\n")
        for image_id in sorted(image_vectors):
            vec = [float(x) for x in image_vectors[image_id]]
            fh.write(json.dumps({"id": image_id, "vector": vec}) + "\n")


def save_keywords(keywords_path, keyword_vectors: Mapping[str, Sequence[float]]) -> None:
    with open(keywords_path, "w", encoding="utf-8") as fh:
        for keyword in sorted(keyword_vectors):
            vec = [float(x) for x in keyword_vectors[keyword]]
            fh.write(json.dumps({"keyword": keyword, "vector": vec}) + "\n")


class HttpTextEmbedder:
    """JSON-over-HTTP text embedder: POST {texts: [...]} -> {vectors: [[...]]}."""

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, texts: list[str]) -> list[list[float]]:
        import httpx

        from .errors import ClientTimeout

        try:
            response = httpx.post(self.endpoint, json={"texts": texts}, timeout=self.timeout)
            response.raise_for_status()
        except httpx.TimeoutException as exc:
            raise ClientTimeout(f"text embedder timed out: {exc}") from exc
        return response.json()["vectors"]
