"""Benchmark metrics over episode batches.

Success rate, mean turns (failures spend the full budget), median/mean
final rank for image tasks, recall-at-K, and the per-attribute normalized
entropy report.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import AttributeSchema, Candidate, EpisodeRecord
from .environments import normalized_entropy
from .errors import EmptyBatch, MixedTaskKinds


@dataclass(frozen=True)
class BenchmarkReport:
    task: str
    sr: float
    mt: float
    episode_count: int
    recall_at: dict[int, float] = field(default_factory=dict)
    medr: Optional[float] = None
    mr: Optional[float] = None
    seeds: tuple[int, ...] = ()
    rows: tuple[dict, ...] = ()

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "sr": self.sr,
            "mt": self.mt,
            "episode_count": self.episode_count,
            "recall_at": {str(k): v for k, v in sorted(self.recall_at.items())},
            "medr": self.medr,
            "mr": self.mr,
            "seeds": list(self.seeds),
            "rows": list(self.rows),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [
            f"task           {self.task}",
            f"episodes       {self.episode_count}",
            f"SR             {self.sr:.4f}",
            f"MT             {self.mt:.4f}",
        ]
        if self.medr is not None:
            lines.append(f"MedR           {self.medr:.4f}")
        if self.mr is not None:
            lines.append(f"MR             {self.mr:.4f}")
        for k in sorted(self.recall_at):
            lines.append(f"R@{k:<12} {self.recall_at[k]:.4f}")
        return "\n".join(lines)


def compute_report(
    episodes: Sequence[EpisodeRecord],
    ks: Sequence[int] = (1, 5, 10),
) -> BenchmarkReport:
    """Aggregate a homogeneous batch of episodes into a benchmark report.

    Failed episodes contribute T_max turns to MT. Rank metrics (MedR, MR,
    R@K) come from the final target rank and apply to image tasks only.
    """
    if not episodes:
        raise EmptyBatch("no episodes to report on")
    kinds = {ep.config.environment.kind for ep in episodes}
    if len(kinds) > 1:
        raise MixedTaskKinds(f"batch mixes task kinds: {sorted(kinds)}")
    task = kinds.pop()

    successes = sum(1 for ep in episodes if ep.success)
    turn_total = sum(ep.turn_count if ep.success else ep.config.t_max for ep in episodes)
    sr = successes / len(episodes)
    mt = turn_total / len(episodes)

    final_ranks = [ep.rank_trace[-1] for ep in episodes if ep.rank_trace]
    medr = mr = None
    recall_at: dict[int, float] = {}
    if task == "image" and len(final_ranks) == len(episodes):
        medr = float(statistics.median(final_ranks))
        mr = sum(final_ranks) / len(final_ranks)
        for k in ks:
            recall_at[k] = sum(1 for r in final_ranks if r <= k) / len(final_ranks)

    rows = tuple(
        {
            "target_id": ep.target_id,
            "seed": ep.seed,
            "success": ep.success,
            "turns": ep.turn_count,
            "reward": ep.trajectory_reward,
            "final_rank": ep.rank_trace[-1] if ep.rank_trace else None,
        }
        for ep in episodes
    )
    seeds = tuple(sorted({ep.seed for ep in episodes}))
    return BenchmarkReport(
        task=task,
        sr=sr,
        mt=mt,
        episode_count=len(episodes),
        recall_at=recall_at,
        medr=medr,
        mr=mr,
        seeds=seeds,
        rows=rows,
    )


def ne_report(candidates: Sequence[Candidate], schema: AttributeSchema) -> dict[str, float]:
    """Normalized entropy of every schema attribute over the candidate set."""
    return {name: normalized_entropy(candidates, name, schema) for name in schema.names}
