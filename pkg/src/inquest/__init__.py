"""Dialogue-driven target identification: engine, oracle policy, and harness."""

from .core import (
    Answer,
    AttributeQuery,
    AttributeSchema,
    Candidate,
    DialogueHistory,
    EnvironmentSpec,
    EpisodeRecord,
    FeedbackKind,
    FeedbackMode,
    FreeText,
    Guess,
    KeywordQuery,
    NumericComparison,
    Parity,
    RewardParams,
    SessionConfig,
    Termination,
    TerminationKind,
    Turn,
    append_turn,
    render_feedback,
)
from .entropy import Belief, Partition, eig, eig_all, entropy, partition
from .environments import (
    GuessNumberEnv,
    GuessWhoEnv,
    ImageEnv,
    env_step,
    guess_who_dataset,
    normalized_entropy,
    truthful_answer,
)
from .errors import InquestError
from .metrics import BenchmarkReport, compute_report, ne_report
from .policies import OracleConfig, OraclePolicy, ReplayPolicy, numeric_question_pool, oracle_next_question
from .retrievers import (
    EmbeddingStore,
    GateParams,
    KeywordSets,
    RankedList,
    discount_gate,
    parse_keywords,
    rank_images,
    rrf_fuse,
    ssm_update,
    tabular_filter,
    target_rank,
)
from .rewards import step_score_image, step_score_tabular, trajectory_reward
from .simulate import run_benchmark, run_episode
from .synth import (
    AttributeDialogueConfig,
    SynthConfig,
    synth_attribute_dialogues,
    synth_guess_number,
    synth_guess_who,
    unfold,
)

__version__ = "0.1.0"
