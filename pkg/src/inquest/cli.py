"""Command-line tool: simulate, benchmark, synth, inspect-eig, ne-report, serve."""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Optional, Sequence

from .core import (
    Answer,
    EnvironmentSpec,
    FeedbackKind,
    FeedbackMode,
    SessionConfig,
    Termination,
    TerminationKind,
    question_from_dict,
    question_text,
    write_episodes_jsonl,
)
from .entropy import eig_all
from .environments import guess_who_dataset, load_annotations
from .errors import ConfigError, InquestError
from .metrics import ne_report
from .policies import ReplayPolicy, attribute_question_pool, numeric_question_pool
from .retrievers import tabular_filter
from .simulate import run_benchmark, run_episode
from .synth import (
    AttributeDialogueConfig,
    SynthConfig,
    export_instances_jsonl,
    synth_attribute_dialogues,
    synth_guess_number,
    synth_guess_who,
)

_TASKS = {"guess-number": "guess_number", "guess-who": "guess_who", "image": "image"}


def _environment_spec(args) -> EnvironmentSpec:
    kind = _TASKS[args.task]
    if kind == "guess_number":
        start = args.window_start if args.window_start is not None else 86
        return EnvironmentSpec(kind=kind, window_start=start)
    if kind == "guess_who":
        return EnvironmentSpec(kind=kind)
    if not args.store or not args.annotations:
        raise ConfigError("image tasks need --store and --annotations")
    return EnvironmentSpec(
        kind=kind,
        store_path=args.store,
        annotations_path=args.annotations,
        keywords_path=args.keywords,
        success_rank=args.success_rank,
    )


def _session_config(args) -> SessionConfig:
    spec = _environment_spec(args)
    termination = Termination(TerminationKind(args.termination), args.success_rank if spec.kind == "image" else None)
    feedback = FeedbackMode(FeedbackKind(args.feedback), args.feedback_k if args.feedback == "top_k" else None)
    return SessionConfig(
        environment=spec,
        t_max=args.t_max,
        termination=termination,
        feedback=feedback,
        seed=args.seed,
    )


def _default_termination(args) -> None:
    if args.termination is None:
        args.termination = "rank_at_most" if args.task == "image" else "singleton"


def _load_script(path) -> ReplayPolicy:
    with open(path, "r", encoding="utf-8") as fh:
        questions = [question_from_dict(json.loads(line)) for line in fh if line.strip()]
    return ReplayPolicy(questions)


def _policy_factory(args):
    """None means the oracle default; otherwise a per-episode policy builder."""
    if args.policy == "replay" or (args.policy == "oracle" and args.script):
        if not args.script:
            raise ConfigError("--policy replay needs --script")
        return lambda env, cfg: _load_script(args.script)
    if args.policy == "external":
        if not args.endpoint:
            raise ConfigError("--policy external needs --endpoint")
        from .policies import ExternalQuestionerPolicy

        return lambda env, cfg: ExternalQuestionerPolicy(args.endpoint)
    return None


def _emit(data, args) -> None:
    if args.format == "json":
        print(json.dumps(data, sort_keys=True, indent=2))
    else:
        if isinstance(data, str):
            print(data)
        else:
            print(json.dumps(data, sort_keys=True, indent=2))


def cmd_simulate(args) -> int:
    _default_termination(args)
    config = _session_config(args)
    factory = _policy_factory(args)
    policy = factory(None, config) if factory else None
    episode = run_episode(config, args.target, policy=policy, seed=args.seed)
    if args.format == "json":
        print(episode.to_json_line())
        return 0
    schema = guess_who_dataset()[0] if config.environment.kind == "guess_who" else None
    print(f"target: {episode.target_id}  seed: {episode.seed}")
    for index, turn in enumerate(episode.turns.turns, start=1):
        line = f"{index:>3}. {question_text(turn.question, schema)}  -> {turn.answer.value}"
        print(line)
        if turn.feedback_text:
            for feedback_line in turn.feedback_text.splitlines():
                print(f"     | {feedback_line}")
    print(
        f"success: {episode.success}  turns: {episode.turn_count}  "
        f"reward: {episode.trajectory_reward:.4f}"
    )
    if episode.rank_trace:
        print(f"rank trace: {list(episode.rank_trace)}")
    return 0


def cmd_benchmark(args) -> int:
    _default_termination(args)
    config = _session_config(args)
    if args.all_targets:
        if config.environment.kind == "guess_number":
            start = config.environment.window_start
            targets = [str(n) for n in range(start, start + 100)]
        elif config.environment.kind == "guess_who":
            targets = [c.id for c in guess_who_dataset()[1]]
        else:
            raise ConfigError("--all-targets is not supported for image tasks; pass --targets")
    else:
        if not args.targets:
            raise ConfigError("pass --targets or --all-targets")
        targets = args.targets.split(",")
    seeds = list(range(args.seeds)) if args.seeds is not None else [args.seed]
    factory = _policy_factory(args)
    report, episodes = run_benchmark(config, targets, seeds, policy_factory=factory, workers=args.workers)
    if args.episodes_out:
        write_episodes_jsonl(episodes, args.episodes_out)
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    print(report.to_json() if args.format == "json" else report.to_text())
    return 0


def cmd_synth(args) -> int:
    rng = random.Random(f"synth-cli|{args.seed}")
    if args.task == "attributes":
        if not args.annotations:
            raise ConfigError("synth --task attributes needs --annotations")
        annotations = load_annotations(args.annotations)
        config = AttributeDialogueConfig(max_positive=args.max_positive)
        trajectories = synth_attribute_dialogues(annotations, config, rng)
    else:
        config = SynthConfig(
            dialogues=args.dialogues,
            t_max=args.t_max,
            seed=args.seed,
            guess_threshold=args.guess_threshold,
        )
        if args.task == "guess-number":
            trajectories = synth_guess_number(config)
        else:
            trajectories = synth_guess_who(config)
    count = export_instances_jsonl(
        trajectories,
        args.out,
        random_round_retention=args.retention,
        rng=rng,
    )
    turns = sum(len(t) for t in trajectories)
    mean_turns = turns / len(trajectories) if trajectories else 0.0
    _emit(
        {
            "dialogues": len(trajectories),
            "instances": count,
            "mean_turns": round(mean_turns, 4),
            "out": args.out,
        },
        args,
    )
    return 0


def _apply_history(candidates, schema, history_path):
    with open(history_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            question = question_from_dict(record["question"])
            answer = Answer(record["answer"])
            candidates = tabular_filter(candidates, question, answer, schema)
    return candidates


def cmd_inspect_eig(args) -> int:
    if args.task == "guess-who":
        schema, candidates = guess_who_dataset()
        pool = attribute_question_pool(schema)
    else:
        start = args.window_start if args.window_start is not None else 86
        from .core import Candidate

        schema = None
        candidates = tuple(Candidate(id=str(n), number=n) for n in range(start, start + 100))
        pool = numeric_question_pool(candidates)
    if args.history:
        candidates = _apply_history(candidates, schema, args.history)
        if args.task == "guess-number":
            pool = numeric_question_pool(candidates)
    scored = eig_all(candidates, pool, schema)
    if args.format == "json":
        print(
            json.dumps(
                [
                    {"question": question_text(q, schema), "eig": score}
                    for q, score in scored
                ],
                indent=2,
            )
        )
        return 0
    print(f"candidates: {len(candidates)}")
    for q, score in scored:
        print(f"{score:8.4f}  {question_text(q, schema)}")
    return 0


def cmd_ne_report(args) -> int:
    if args.dataset != "guess-who":
        raise ConfigError("ne-report currently covers the embedded guess-who dataset")
    schema, candidates = guess_who_dataset()
    report = ne_report(candidates, schema)
    if args.format == "json":
        print(json.dumps(report, sort_keys=True, indent=2))
        return 0
    for name in schema.names:
        print(f"{name:<16} {report[name]:.4f}")
    return 0


def cmd_serve(args) -> int:
    from .service import load_service_config, serve

    serve(load_service_config(args.config))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--config", default=None, help="service/config JSON file")

    parser = argparse.ArgumentParser(prog="inquest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_task_options(p, include_image=True):
        choices = list(_TASKS) if include_image else ["guess-number", "guess-who"]
        p.add_argument("--task", choices=choices, required=True)
        p.add_argument("--window-start", type=int, default=None)
        p.add_argument("--t-max", type=int, default=16)
        p.add_argument("--termination", choices=[t.value for t in TerminationKind], default=None)
        p.add_argument("--feedback", choices=[f.value for f in FeedbackKind], default="none")
        p.add_argument("--feedback-k", type=int, default=10)
        if include_image:
            p.add_argument("--store", default=None, help="embedding store file")
            p.add_argument("--annotations", default=None, help="annotations JSONL")
            p.add_argument("--keywords", default=None, help="keyword vector table JSONL")
            p.add_argument("--success-rank", type=int, default=5)
        p.add_argument("--policy", choices=("oracle", "replay", "external"), default="oracle")
        p.add_argument("--script", default=None, help="replay script: one question JSON per line")
        p.add_argument("--endpoint", default=None, help="external questioner URL")

    p_sim = sub.add_parser("simulate", parents=[common], help="run one episode and print the transcript")
    add_task_options(p_sim)
    p_sim.add_argument("--target", required=True)

    p_bench = sub.add_parser("benchmark", parents=[common], help="run a target x seed batch and report metrics")
    add_task_options(p_bench)
    p_bench.add_argument("--targets", default=None, help="comma-separated target ids")
    p_bench.add_argument("--all-targets", action="store_true")
    p_bench.add_argument("--seeds", type=int, default=None, help="number of seeds (0..n-1)")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--episodes-out", default=None, help="write per-episode JSONL here")
    p_bench.add_argument("--report-out", default=None, help="write the JSON report here")

    p_synth = sub.add_parser("synth", parents=[common], help="generate synthetic dialogues")
    p_synth.add_argument("--task", choices=("guess-number", "guess-who", "attributes"), required=True)
    p_synth.add_argument("--dialogues", type=int, default=1000)
    p_synth.add_argument("--t-max", type=int, default=16)
    p_synth.add_argument("--guess-threshold", type=int, default=2)
    p_synth.add_argument("--annotations", default=None)
    p_synth.add_argument("--max-positive", type=int, default=20)
    p_synth.add_argument("--retention", action="store_true", help="random round retention")
    p_synth.add_argument("--out", required=True)

    p_eig = sub.add_parser("inspect-eig", parents=[common], help="print the EIG table for a state")
    p_eig.add_argument("--task", choices=("guess-number", "guess-who"), required=True)
    p_eig.add_argument("--window-start", type=int, default=None)
    p_eig.add_argument("--history", default=None, help="JSONL of {question, answer} to apply first")

    p_ne = sub.add_parser("ne-report", parents=[common], help="per-attribute normalized entropy")
    p_ne.add_argument("--dataset", default="guess-who")

    sub.add_parser("serve", parents=[common], help="run the HTTP session service")

    p_sim.set_defaults(func=cmd_simulate)
    p_bench.set_defaults(func=cmd_benchmark)
    p_synth.set_defaults(func=cmd_synth)
    p_eig.set_defaults(func=cmd_inspect_eig)
    p_ne.set_defaults(func=cmd_ne_report)
    sub.choices["serve"].set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InquestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
