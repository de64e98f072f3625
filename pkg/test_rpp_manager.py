#!/usr/bin/env python3
"""
Tests for the rpp command-line interface
"""

import hashlib
import json

import pytest

from group_schema import DEFAULT_CONFIG
from rpp_manager import json_safe, main

Z2 = json.dumps({"abelian": [2]})
DIAGONAL = json.dumps({"group": {"abelian": [2]}, "n": 4, "generators": [[1, 1, 1, 1]]})
INSTANCE = json.dumps({"group": {"abelian": [2]}, "n": 4, "generators": [[1, 1, 1, 1]], "r": 1})
SQUARE_SPACE = json.dumps({"group": {"abelian": [2]}, "space": [[0, 0], [0, 1], [1, 0], [1, 1]],
                           "symmetric": True})


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_rpp_solve_diagonal(capsys):
    code, out = run(capsys, "rpp", "solve", "--instance", INSTANCE)
    assert code == 0
    assert out["x"] == [0, 1, 0, 1]
    assert out["verified_distance"] == 2
    assert out["certificate"]["kind"] == "blocks"
    assert out["params"]["algorithm"] == "general_k"


def test_rpp_verify_round_trip(capsys, tmp_path):
    _, solution = run(capsys, "rpp", "solve", "--instance", INSTANCE)
    path = tmp_path / "solution.json"
    path.write_text(json.dumps(solution))
    code, report = run(capsys, "rpp", "verify", "--instance", INSTANCE, "--solution", str(path))
    assert code == 0 and report["ok"] and report["distance"] == 2

    solution["x"] = [1, 1, 1, 1]
    path.write_text(json.dumps(solution))
    code, error = run(capsys, "rpp", "verify", "--instance", INSTANCE, "--solution", str(path))
    assert code == 1
    assert error["error"] == "verification_failed"


def test_rpp_verify_malformed_certificate_fails_verification(capsys, tmp_path):
    _, solution = run(capsys, "rpp", "solve", "--instance", INSTANCE)
    path = tmp_path / "solution.json"
    solution["certificate"] = {"kind": "greedy", "trace": "not a list"}
    path.write_text(json.dumps(solution))
    code, error = run(capsys, "rpp", "verify", "--instance", INSTANCE, "--solution", str(path))
    assert code == 1
    assert error["error"] == "verification_failed"
    assert error["detail"]["message"].startswith("malformed solution")

    del solution["certificate"]
    path.write_text(json.dumps(solution))
    code, error = run(capsys, "rpp", "verify", "--instance", INSTANCE, "--solution", str(path))
    assert code == 1 and error["error"] == "verification_failed"


def test_rpp_regime_violation_is_a_domain_error(capsys):
    code, error = run(capsys, "rpp", "solve", "--instance", INSTANCE, "--r", "2")
    assert code == 1
    assert error["error"] == "regime_violation"
    assert "message" in error["detail"]


def test_unknown_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["rpp", "solve", "--bogus"])
    assert exc.value.code == 2


def test_malformed_group_is_invalid_input(capsys):
    code, error = run(capsys, "group", "weight", "--group", '{"nope": 1}', "--x", "[1]")
    assert code == 2
    assert error["error"] == "invalid_input"


def test_group_commands(capsys):
    assert run(capsys, "group", "mul", "--group", Z2, "--x", "[1,0]", "--y", "[1,1]")[1] == {"result": [0, 1]}
    assert run(capsys, "group", "weight", "--group", Z2, "--x", "[1,0,1]")[1] == {"weight": 2}
    assert run(capsys, "group", "hamming", "--group", Z2, "--x", "[1,0]", "--y", "[0,0]")[1] == {"hamming": 1}
    assert run(capsys, "group", "distance", "--subgroup", DIAGONAL, "--x", "[0,1,0,1]")[1] == {"distance": 2}
    _, elements = run(capsys, "group", "enumerate", "--subgroup", DIAGONAL)
    assert elements == {"order": 2, "elements": [[0, 0, 0, 0], [1, 1, 1, 1]]}
    _, report = run(capsys, "group", "dimension", "--subgroup", DIAGONAL)
    assert report["order"] == 2 and report["exact_delta"] == "1"
    _, report = run(capsys, "group", "feasibility", "--group", Z2, "--n", "16", "--k", "4", "--r", "1")
    assert report["feasible"]


def test_perm_commands(capsys):
    _, out = run(capsys, "perm", "order", "--gens", "(0 1)", "(0 1 2 3 4)", "--degree", "5")
    assert out["order"] == 120
    _, out = run(capsys, "perm", "member", "--gens", "(0 1 2)", "--element", "(0 1)")
    assert out == {"member": False}
    _, out = run(capsys, "perm", "member", "--gens", "[1, 2, 0]", "--element", "(0 2 1)")
    assert out == {"member": True}
    _, out = run(capsys, "perm", "stab", "--gens", "(0 1)", "(0 1 2 3)", "--points", "0")
    assert out["order"] == 6
    _, out = run(capsys, "perm", "member", "--subgroup", DIAGONAL, "--element", "[1,1,1,1]")
    assert out == {"member": True}
    _, out = run(capsys, "perm", "cosetcount", "--subgroup", DIAGONAL, "--prefix", "[1]")
    assert out["count"] == 1 and out["in_projection"]
    _, out = run(capsys, "perm", "cosetcount", "--subgroup", DIAGONAL)
    assert out["count"] == 2


def test_smallbias_gen_and_verify(capsys, tmp_path):
    code, space = run(capsys, "smallbias", "gen", "--group", json.dumps({"abelian": [3]}), "--n", "2",
                      "--eps", "1/2")
    assert code == 0
    assert space["measured_bias"] <= 0.5 + 1e-9
    assert space["symmetric"] and len(space["space"]) == space["size"]

    path = tmp_path / "space.json"
    path.write_text(json.dumps(space))
    code, out = run(capsys, "smallbias", "verify", "--space", str(path), "--eps", "1/2")
    assert code == 0 and out["measured_bias"] == pytest.approx(space["measured_bias"])
    code, error = run(capsys, "smallbias", "verify", "--space", str(path), "--eps", "1/100")
    assert code == 1 and error["error"] == "bias_too_high"


def test_cayley_commands(capsys):
    _, out = run(capsys, "cayley", "lambda", "--space", SQUARE_SPACE, "--method", "numeric")
    assert out["lambda"] == pytest.approx(0, abs=1e-9)
    _, out = run(capsys, "cayley", "walk", "--space", SQUARE_SPACE, "--t", "3", "--trials", "100", "--seed", "4")
    assert len(out["walk"]) == 4 and out["trials"] == 100
    _, out = run(capsys, "cayley", "confine", "--space", SQUARE_SPACE, "--subgroup",
                 json.dumps({"n": 2, "generators": [[1, 1]]}), "--t", "3", "--method", "exact", "--alpha", "0")
    assert out["exact"] == "1/16"
    assert out["reference_bound"] == pytest.approx(0.125)


def test_suite_run_is_byte_identical(capsys):
    argv = ["suite", "run", "--profile", "smoke", "--seed", "7", "--items", "3", "9"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["overall_status"] == "success"


def test_manifest_records_output_digest(capsys, tmp_path):
    manifest_path = tmp_path / "manifest.json"
    instance_path = tmp_path / "instance.json"
    instance_path.write_text(INSTANCE)
    assert main(["--manifest", str(manifest_path), "rpp", "solve", "--instance", str(instance_path)]) == 0
    out = capsys.readouterr().out
    manifest = json.loads(manifest_path.read_text())
    assert manifest["output_sha256"] == hashlib.sha256(out.rstrip("\n").encode("utf-8")).hexdigest()
    assert manifest["input_digests"][str(instance_path)] == hashlib.sha256(INSTANCE.encode()).hexdigest()
    assert manifest["versions"]["rpp"]


def test_flags_override_config_for_one_run(capsys):
    before = DEFAULT_CONFIG.enumeration_cap
    code, error = run(capsys, "--enum-cap", "1", "group", "enumerate", "--subgroup", DIAGONAL)
    assert code == 1 and error["error"] == "cap_exceeded"
    assert DEFAULT_CONFIG.enumeration_cap == before


def test_json_safe_large_integers():
    assert json_safe({"order": 2 ** 60, "small": 5, "flag": True}) == {
        "order": str(2 ** 60), "small": 5, "flag": True}
