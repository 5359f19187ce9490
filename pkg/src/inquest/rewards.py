"""Step scores and trajectory rewards.

Tabular step scores are the question's expected information gain; image
step scores are the change in log-rank of the target. A trajectory earns
the success constant plus the mean step score minus a linear length
penalty, or minus the success constant on failure.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .core import RewardParams
from .entropy import Partition, eig_from_counts
from .errors import LengthMismatch

__all__ = [
    "RewardParams",
    "step_score_tabular",
    "step_score_image",
    "trajectory_reward",
]


def step_score_tabular(
    n_before: int,
    partition: Optional[Partition],
    params: RewardParams = RewardParams(),
) -> float:
    """EIG of the asked question; illegal/unparseable questions earn the soft penalty.

    Pass partition=None for a question that failed the legality check.
    """
    if partition is None:
        return params.soft_penalty
    if partition.n_yes + partition.n_no != n_before:
        raise LengthMismatch("partition does not cover the candidate set")
    return eig_from_counts(partition.n_yes, partition.n_no)


def step_score_image(
    rank_before: int,
    rank_after: Optional[int],
    params: RewardParams = RewardParams(),
) -> float:
    """Change in log-rank log(r_before) - log(r_after); positive when the rank improves."""
    if rank_after is None:
        return params.soft_penalty
    if rank_before < 1 or rank_after < 1:
        raise ValueError("ranks are 1-based")
    log = params.log
    return log(rank_before) - log(rank_after)


def trajectory_reward(
    step_scores: Sequence[float],
    success: bool,
    turn_count: int,
    params: RewardParams = RewardParams(),
) -> float:
    """Episode-level scalar: kappa + mean step score - alpha*T/T_max, or -kappa on failure."""
    if turn_count != len(step_scores):
        raise LengthMismatch(f"{len(step_scores)} step scores for {turn_count} turns")
    if not success:
        return -params.kappa
    if not (1 <= turn_count <= params.t_max):
        raise LengthMismatch(f"turn count {turn_count} outside [1, {params.t_max}]")
    mean_step = math.fsum(step_scores) / turn_count
    penalty = params.alpha * turn_count / params.t_max
    return params.kappa + mean_step - penalty
