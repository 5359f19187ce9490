"""Command-line tool coverage: each subcommand, determinism, exit codes."""

import json

import pytest

from inquest.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_transcript_determinism(capsys):
    args = ("simulate", "--task", "guess-number", "--target", "143", "--seed", "7")
    code1, out1, _ = run_cli(capsys, *args)
    code2, out2, _ = run_cli(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert "success: True" in out1


def test_simulate_json_format(capsys):
    code, out, _ = run_cli(
        capsys, "simulate", "--task", "guess-who", "--target", "C04", "--seed", "1", "--format", "json"
    )
    assert code == 0
    record = json.loads(out)
    assert record["target_id"] == "C04"
    assert record["success"] is True


def test_benchmark_oracle_guess_number_all_targets(capsys):
    code, out, _ = run_cli(
        capsys,
        "benchmark", "--task", "guess-number", "--policy", "oracle", "--all-targets",
        "--seeds", "2", "--format", "json",
    )
    assert code == 0
    report = json.loads(out)
    assert report["sr"] == 1.0
    assert report["episode_count"] == 200


def test_policy_replay_without_script_errors(capsys):
    code, _, err = run_cli(
        capsys, "benchmark", "--task", "guess-who", "--policy", "replay", "--all-targets"
    )
    assert code == 2
    assert "--script" in err


def test_benchmark_writes_episode_jsonl(tmp_path, capsys):
    out_path = tmp_path / "episodes.jsonl"
    report_path = tmp_path / "report.json"
    code, _, _ = run_cli(
        capsys,
        "benchmark", "--task", "guess-who", "--targets", "C01,C02",
        "--seeds", "2", "--episodes-out", str(out_path), "--report-out", str(report_path),
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert len(lines) == 4
    assert json.loads(report_path.read_text())["sr"] == 1.0


def test_benchmark_jsonl_byte_determinism(tmp_path, capsys):
    paths = []
    for name in ("one", "two"):
        path = tmp_path / f"{name}.jsonl"
        run_cli(
            capsys,
            "benchmark", "--task", "guess-number", "--targets", "90,100,110",
            "--seeds", "3", "--episodes-out", str(path),
        )
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_ne_report_text(capsys):
    code, out, _ = run_cli(capsys, "ne-report", "--dataset", "guess-who")
    assert code == 0
    assert "has_beard" in out
    assert "0.9183" in out


def test_ne_report_json(capsys):
    code, out, _ = run_cli(capsys, "ne-report", "--dataset", "guess-who", "--format", "json")
    report = json.loads(out)
    assert report["has_beard"] == pytest.approx(0.9183, abs=1e-4)


def test_inspect_eig_guess_who(capsys):
    code, out, _ = run_cli(capsys, "inspect-eig", "--task", "guess-who", "--format", "json")
    assert code == 0
    table = json.loads(out)
    assert table[0]["eig"] == pytest.approx(1.0, abs=1e-6)
    assert len(table) == 32  # every (attribute, value) question


def test_inspect_eig_with_history(tmp_path, capsys):
    history = tmp_path / "history.jsonl"
    history.write_text(
        json.dumps({"question": {"type": "attribute", "attribute": "gender", "value": "male"}, "answer": "yes"})
        + "\n"
    )
    code, out, _ = run_cli(
        capsys, "inspect-eig", "--task", "guess-who", "--history", str(history)
    )
    assert code == 0
    assert "candidates: 18" in out


def test_synth_command(tmp_path, capsys):
    out_path = tmp_path / "dialogues.jsonl"
    code, out, _ = run_cli(
        capsys,
        "synth", "--task", "guess-who", "--dialogues", "20", "--seed", "3",
        "--out", str(out_path), "--format", "json",
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["dialogues"] == 20
    lines = out_path.read_text().splitlines()
    assert len(lines) == summary["instances"]
    first = json.loads(lines[0])
    assert {"dialogue_id", "turn_index", "history", "next_question", "answer"} <= set(first)


def test_simulate_image_with_script(tmp_path, capsys):
    import numpy as np

    from inquest.retrievers import save_keywords, save_store

    rng = np.random.default_rng(1)
    vectors = {}
    for i in range(8):
        vec = rng.normal(size=4)
        vectors[f"p{i}"] = (vec / np.linalg.norm(vec)).tolist()
    keywords = {}
    for name in ("red", "blue"):
        vec = rng.normal(size=4)
        keywords[name] = (vec / np.linalg.norm(vec)).tolist()
    save_store(tmp_path / "store.jsonl", 4, vectors)
    save_keywords(tmp_path / "kw.jsonl", keywords)
    with open(tmp_path / "annot.jsonl", "w") as fh:
        for i in range(8):
            fh.write(json.dumps({"id": f"p{i}", "attributes": {"red": 1 if i < 4 else -1}}) + "\n")
    script = tmp_path / "script.jsonl"
    script.write_text(json.dumps({"type": "keyword", "keyword": "red"}) + "\n")

    code, out, _ = run_cli(
        capsys,
        "simulate", "--task", "image", "--target", "p2",
        "--store", str(tmp_path / "store.jsonl"),
        "--annotations", str(tmp_path / "annot.jsonl"),
        "--keywords", str(tmp_path / "kw.jsonl"),
        "--script", str(script), "--t-max", "4",
        "--format", "json",
    )
    assert code == 0
    record = json.loads(out)
    assert record["rank_trace"] is not None


def test_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "benchmark", "--task", "guess-who")
    assert code == 2
    assert "error:" in err


def test_unknown_target_errors(capsys):
    code, _, err = run_cli(capsys, "simulate", "--task", "guess-who", "--target", "C99")
    assert code == 2
    assert "error" in err.lower()
