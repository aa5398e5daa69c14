import json
import subprocess
import sys

import pytest

from lefthanded.cli import generate_artifact, main, verify_artifact


def run_cli(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    payload = json.loads(out.read_text()) if out.exists() else None
    return code, payload


def write_json(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


# ---------------------------------------------------------------- check

def test_check_toy3_is_clean(tmp_path):
    inst = write_json(tmp_path, "toy3.json", {"app": "toy3", "window": [0, 12]})
    code, payload = run_cli(["check", inst], tmp_path)
    assert code == 0 and payload["ok"]
    assert payload["pstar_checked"] > 0


def test_check_reports_the_lll_condition(tmp_path):
    inst = write_json(tmp_path, "toy3.json", {"app": "toy3", "alpha": "1/2", "window": [0, 12]})
    code, payload = run_cli(["check", inst], tmp_path)
    assert code == 1
    assert {v["check"] for v in payload["violations"]} == {"lll-condition"}


def test_check_rejects_unknown_apps_and_bad_json(tmp_path):
    inst = write_json(tmp_path, "bad.json", {"app": "nope"})
    assert main(["check", inst]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["check", str(broken)]) == 2
    assert main(["check", write_json(tmp_path, "noapp.json", {"params": {}})]) == 2


def test_usage_errors_exit_two():
    assert main([]) == 2
    assert main(["generate", "--app", "beck"]) == 2
    assert main(["generate", "--app", "nope", "--length", "4"]) == 2
    assert main(["check", "x", "--window", "3"]) == 2


# ---------------------------------------------------------------- generate and verify

ROUND_TRIPS = [
    ("beck", ["--length", "256"]),
    ("alon", ["--length", "256"]),
    ("beck-game", ["--length", "128", "--oracle", "block-mirror:4"]),
    ("alon-game", ["--length", "128", "--oracle", "seeded-random", "--oracle-seed", "3"]),
    ("lacunary", ["--length", "64", "--color-range", "256"]),
    ("thue", ["--length", "200", "--list-seed", "5"]),
    ("toy3", ["--length", "30"]),
    ("single-bit", ["--length", "1"]),
]


@pytest.mark.parametrize("app,extra", ROUND_TRIPS)
def test_generate_then_verify(app, extra, tmp_path):
    code, artifact = run_cli(["generate", "--app", app, "--seed", "2", *extra], tmp_path, "art.json")
    assert code == 0 and artifact["certificate"]["ok"]
    assert artifact["manifest"]["app"] == app
    code, report = run_cli(["verify", str(tmp_path / "art.json"), "--app", app], tmp_path, "ver.json")
    assert code == 0 and report["violations"] == []


def test_generation_is_byte_identical_for_a_seed(tmp_path):
    argv = ["generate", "--app", "thue", "--length", "120", "--seed", "9"]
    main([*argv, "--out", str(tmp_path / "a.json")])
    main([*argv, "--out", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_verify_flags_an_injected_repetition(tmp_path):
    artifact = generate_artifact("thue", {}, 80, seed=1)
    colors = artifact["colors"]
    colors[10:16] = colors[4:10]
    artifact["colors"] = colors
    path = write_json(tmp_path, "bad.json", artifact)
    code, report = run_cli(["verify", path, "--app", "thue"], tmp_path)
    assert code == 1 and report["violations"]


def test_verify_flags_a_broken_beck_sequence():
    artifact = generate_artifact("beck", {"threshold": 8}, 200, seed=1)
    assert verify_artifact("beck", artifact) == []
    artifact["sequence"] = "0" * 200
    assert any(v["check"] == "repetition" for v in verify_artifact("beck", artifact))


def test_verify_flags_an_edited_transcript():
    artifact = generate_artifact("beck-game", {"oracle": "copycat"}, 64, seed=4)
    t = artifact["transcript"]
    artifact["transcript"] = t[:5] + ("0" if t[5] == "1" else "1") + t[6:]
    assert {"check": "oracle-replay"} in verify_artifact("beck-game", artifact)


def test_verify_flags_a_lacunary_colour_table():
    artifact = generate_artifact("lacunary", {}, 64, seed=1, color_range=64)
    artifact["colors"]["values"][7] += 1
    assert {"check": "color-table"} in verify_artifact("lacunary", artifact)


def test_truncated_artifact_exits_two(tmp_path):
    code, _ = run_cli(["generate", "--app", "alon", "--length", "64"], tmp_path, "art.json")
    text = (tmp_path / "art.json").read_text()
    (tmp_path / "art.json").write_text(text[: len(text) // 2])
    assert main(["verify", str(tmp_path / "art.json"), "--app", "alon"]) == 2


def test_sequence_of_wrong_length_exits_two(tmp_path):
    artifact = generate_artifact("beck", {}, 64, seed=1)
    artifact["sequence"] = artifact["sequence"][:-1]
    assert main(["verify", write_json(tmp_path, "a.json", artifact), "--app", "beck"]) == 2


def test_stage_budget_exits_three(tmp_path, monkeypatch):
    monkeypatch.setenv("LLLL_MAX_STAGES", "0")
    assert main(["generate", "--app", "toy3", "--length", "60", "--seed", "1"]) == 3


# ---------------------------------------------------------------- analyze

def test_analyze_toy3_log(tmp_path):
    code, artifact = run_cli(["generate", "--app", "toy3", "--length", "40", "--seed", "5"],
                             tmp_path, "art.json")
    assert artifact["stages"] > 0
    code, report = run_cli(["analyze", str(tmp_path / "art.json"), "--max-nodes", "2"], tmp_path)
    assert code == 0 and report["legal"]
    assert all(row["ok"] for row in report["invariants"])
    assert report["distinct_trees"] == report["stages"]
    assert all(row["ok"] for row in report["weight_sums"])


def test_analyze_flags_an_illegal_log(tmp_path):
    path = write_json(tmp_path, "log.json", {"manifest": {"app": "toy3"}, "log": [[5], [0]]})
    code, report = run_cli(["analyze", path], tmp_path)
    assert code == 0 and not report["legal"]
    assert report["order_breaks"] == [[1, 2]]


def test_analyze_empty_log(tmp_path):
    path = write_json(tmp_path, "log.json", {"manifest": {"app": "toy3"}, "log": []})
    code, report = run_cli(["analyze", path], tmp_path)
    assert code == 0 and report["legal"] and report["stages"] == 0


def test_analyze_needs_a_log_list(tmp_path):
    path = write_json(tmp_path, "log.json", {"manifest": {"app": "toy3"}})
    assert main(["analyze", path]) == 2


# ---------------------------------------------------------------- tcheck and bounds

def test_tcheck_on_toy3(tmp_path):
    code, report = run_cli(["tcheck", "--count", "3", "--max-nodes", "2", "--trials", "300"], tmp_path)
    assert code == 0 and report["ok"] and len(report["trees"]) == 3


def test_bounds_single_bit(tmp_path):
    code, report = run_cli(["bounds", "--app", "single-bit", "--length", "1"], tmp_path)
    assert code == 0 and report["rows"] == [{"index": 0, "N": 180}]


def test_bounds_on_a_family_without_settlement(tmp_path):
    code, report = run_cli(["bounds", "--app", "alon", "--length", "2"], tmp_path)
    assert code == 0 and all(row["N"] is None for row in report["rows"])


def test_module_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "lefthanded", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
