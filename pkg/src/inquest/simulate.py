"""Episode runner and benchmark batches.

Runs one policy against one environment to produce an EpisodeRecord, and
fans episode grids (targets x seeds) out over a worker pool to build
benchmark reports.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from .core import Answer, EpisodeRecord, FreeText, SessionConfig, TerminationKind
from .entropy import partition
from .environments import (
    Environment,
    ImageEnv,
    SimulationState,
    build_environment,
    env_step,
    truthful_answer,
)
from .errors import ConfigError, ExhaustedPool, ExhaustedScript, UnanswerableQuestion, UnparseableQuestion
from .metrics import BenchmarkReport, compute_report
from .policies import OracleConfig, OraclePolicy
from .rewards import step_score_image, step_score_tabular, trajectory_reward

PolicyFactory = Callable[[Environment, SessionConfig], object]


def episode_rng(seed: int, target_id: str) -> random.Random:
    """Deterministic per-episode stream derived from (seed, target)."""
    return random.Random(f"{seed}|{target_id}")


def default_policy_factory(env: Environment, config: SessionConfig, oracle: Optional[OracleConfig] = None):
    """Max-EIG oracle wired for the environment's question pool and termination mode."""
    if isinstance(env, ImageEnv):
        raise ConfigError("image environments need a replay script or an external questioner")
    oracle = oracle or OracleConfig(
        pool="numeric_templates" if env.kind == "guess_number" else "attribute_values"
    )
    allow_guess = config.termination.kind is TerminationKind.EXPLICIT_GUESS
    return OraclePolicy(oracle, schema=env.schema, allow_guess=allow_guess)


def run_episode(
    config: SessionConfig,
    target_id: str,
    policy=None,
    env: Optional[Environment] = None,
    answerer: Callable[..., Answer] = truthful_answer,
    seed: Optional[int] = None,
) -> EpisodeRecord:
    """Play one full episode and return its trajectory with scores and reward."""
    if env is None:
        env = build_environment(config.environment, target_id)
    if policy is None:
        policy = default_policy_factory(env, config)
    seed = config.seed if seed is None else seed
    rng = episode_rng(seed, target_id)
    state = SimulationState(env=env, config=config, answerer=answerer)
    params = config.rewards

    while not state.done and state.turn_count < config.t_max:
        snapshot = state.candidates
        try:
            question = policy.next_question(snapshot, state.history, rng)
        except (ExhaustedScript, ExhaustedPool):
            break
        except UnparseableQuestion:
            question = FreeText("")

        if isinstance(env, ImageEnv):
            result = env_step(state, question)
            if isinstance(question, FreeText):
                score = params.soft_penalty
            else:
                score = step_score_image(result.info["rank_before"], result.info["rank_after"], params)
        else:
            try:
                part = partition(snapshot, question, env.schema)
                score = step_score_tabular(len(snapshot), part, params)
            except UnanswerableQuestion:
                score = step_score_tabular(len(snapshot), None, params)
            env_step(state, question)
        state.step_scores.append(score)

    success = state.done and state.success
    turn_count = state.turn_count
    if turn_count == 0:
        reward = params.kappa if success else -params.kappa
    else:
        reward = trajectory_reward(state.step_scores, success, turn_count, params)
    return EpisodeRecord(
        config=config,
        target_id=target_id,
        turns=state.history,
        step_scores=tuple(state.step_scores),
        success=success,
        turn_count=turn_count,
        trajectory_reward=reward,
        seed=seed,
        rank_trace=tuple(state.rank_trace) if isinstance(env, ImageEnv) else None,
    )


def run_benchmark(
    config: SessionConfig,
    targets: Sequence[str],
    seeds: Sequence[int],
    policy_factory: Optional[PolicyFactory] = None,
    ks: Sequence[int] = (1, 5, 10),
    workers: int = 1,
) -> tuple[BenchmarkReport, list[EpisodeRecord]]:
    """Run every (target, seed) episode and aggregate the batch into a report."""
    factory = policy_factory or default_policy_factory
    jobs = [(target, seed) for target in targets for seed in seeds]

    def one(job: tuple[str, int]) -> EpisodeRecord:
        target, seed = job
        env = build_environment(config.environment, target)
        policy = factory(env, config)
        return run_episode(config, target, policy=policy, env=env, seed=seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(one, jobs))
    else:
        episodes = [one(job) for job in jobs]
    return compute_report(episodes, ks), episodes
