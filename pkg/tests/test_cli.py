"""Tests for the command-line interface."""

import json
import subprocess
import sys

import pytest

from homdetect.bayes import HypothesisPair
from homdetect.cli import main
from homdetect.photon_stats import Protocol, ProtocolParams, build_distribution

LOW_FLAGS = ["--protocol", "direct", "--xi", "0.1", "--eta", "0.8", "--ne", "0.02", "--ni", "0.02"]
HEADLINE_FLAGS = [
    "--protocol", "coherent", "--xi", "0.1", "--eta", "0.9", "--epsilon", "0.9",
    "--nc", "6", "--ne", "1", "--ni", "1",
]


def run(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# dist
# ---------------------------------------------------------------------------


def test_dist_csv_stdout(capsys):
    code, out, _ = run(["dist"] + LOW_FLAGS, capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "j,p"
    k, p = lines[1].split(",")
    params = ProtocolParams(protocol=Protocol.DIRECT, xi=0.1, eta=0.8, n_e=0.02, n_i=0.02)
    assert (int(k), float(p)) == (0, build_distribution(params).prob(0))


def test_dist_joint_header(capsys):
    code, out, _ = run(["dist"] + HEADLINE_FLAGS, capsys)
    assert code == 0
    assert out.startswith("j,k,p\n0,0,")


def test_dist_json(capsys):
    code, out, _ = run(["dist", "--format", "json"] + LOW_FLAGS, capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["protocol"] == "direct"
    assert doc["saturation"] is None
    assert doc["entries"][0][0] == 0


def test_dist_saturation_flag(capsys):
    code, out, _ = run(["dist", "--saturation", "2"] + LOW_FLAGS, capsys)
    assert code == 0
    assert len(out.strip().split("\n")) == 1 + 3  # bins 0, 1, 2


def test_dist_diff_table(capsys):
    code, out, _ = run(["dist", "--diff"] + HEADLINE_FLAGS, capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "j,k,dp"
    params = ProtocolParams(
        protocol=Protocol.COHERENT_HOM, xi=0.1, eta=0.9, epsilon=0.9, n_c=6.0, n_e=1.0, n_i=1.0
    )
    pair = HypothesisPair.from_params(params)
    j, k, dp = lines[1].split(",")
    expected = pair.present.prob(0, 0) - pair.absent.prob(0, 0)
    assert float(dp) == pytest.approx(expected, rel=1e-15)
    # differences must sum to ~zero: both tables are normalized
    total = sum(float(line.split(",")[2]) for line in lines[1:])
    assert abs(total) < 1e-9


def test_dist_writes_file(tmp_path, capsys):
    target = tmp_path / "table.csv"
    code, out, _ = run(["dist", "-o", str(target)] + LOW_FLAGS, capsys)
    assert code == 0
    assert out == ""
    assert target.read_text().startswith("j,p\n")


def test_dist_rejects_bad_parameter(capsys):
    code, _, err = run(["dist", "--protocol", "direct", "--xi", "2"], capsys)
    assert code == 2
    assert "xi" in err


def test_dist_requires_protocol(capsys):
    code, _, err = run(["dist", "--xi", "0.1"], capsys)
    assert code == 2
    assert "protocol" in err


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


SIM_FLAGS = ["--truth", "present", "--n-measurements", "10",
             "--n-trajectories", "300", "--seed", "4"]


def test_simulate_writes_trajectories_and_summary(tmp_path, capsys):
    out_path = tmp_path / "run.csv"
    code, _, _ = run(["simulate", "-o", str(out_path)] + LOW_FLAGS + SIM_FLAGS, capsys)
    assert code == 0
    lines = out_path.read_text().strip().split("\n")
    assert lines[0] == "step,mean_Pe,q25,q75"
    assert len(lines) == 11
    summary = json.loads((tmp_path / "run.summary.json").read_text())
    assert summary["N"] == 10
    assert summary["seed"] == 4
    assert summary["truth"] == "present"
    assert summary["n_trajectories"] == 300
    assert 0.0 <= summary["empirical_confidence"] <= 1.0


def test_simulate_reruns_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(["simulate", "-o", str(a)] + LOW_FLAGS + SIM_FLAGS, capsys)
    run(["simulate", "-o", str(b)] + LOW_FLAGS + SIM_FLAGS, capsys)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.summary.json").read_bytes() == (tmp_path / "b.summary.json").read_bytes()


def test_simulate_json_steps(tmp_path, capsys):
    out_path = tmp_path / "run.json"
    code, _, _ = run(
        ["simulate", "--format", "json", "-o", str(out_path)] + LOW_FLAGS + SIM_FLAGS, capsys
    )
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["step"] == list(range(1, 11))
    assert len(doc["mean_Pe"]) == 10


def test_simulate_requires_inputs(tmp_path, capsys):
    code, _, err = run(["simulate"] + LOW_FLAGS + ["--seed", "1", "-o", str(tmp_path / "x.csv")], capsys)
    assert code == 2 and "requires" in err
    code, _, err = run(["simulate"] + LOW_FLAGS + SIM_FLAGS, capsys)
    assert code == 2 and "output" in err


# ---------------------------------------------------------------------------
# nmeas and speedup
# ---------------------------------------------------------------------------


def test_nmeas_row(capsys):
    code, out, _ = run(["nmeas"] + LOW_FLAGS, capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "protocol,eta,n_e,n_i,n_c,t,N,speedup,at_bound"
    cells = lines[1].split(",")
    assert cells[0] == "direct"
    assert cells[6] == "117"
    assert float(cells[7]) == 1.0


def test_nmeas_custom_target(capsys):
    _, out_default, _ = run(["nmeas"] + LOW_FLAGS, capsys)
    _, out_strict, _ = run(["nmeas", "--c-target", "0.99"] + LOW_FLAGS, capsys)
    n_default = int(out_default.strip().split("\n")[1].split(",")[6])
    n_strict = int(out_strict.strip().split("\n")[1].split(",")[6])
    assert n_strict > n_default


def test_speedup_row(capsys):
    code, out, _ = run(["speedup"] + HEADLINE_FLAGS, capsys)
    assert code == 0
    cells = out.strip().split("\n")[1].split(",")
    assert cells[6] == "57"
    assert float(cells[7]) == pytest.approx(47.649122807017541, rel=1e-12)


def test_speedup_rejects_direct(capsys):
    code, _, err = run(["speedup"] + LOW_FLAGS, capsys)
    assert code == 2
    assert "direct" in err


def test_speedup_with_optimization(capsys):
    code, out, _ = run(
        ["speedup", "--optimize-nc", "--protocol", "incoherent", "--xi", "0.1",
         "--eta", "0.95", "--epsilon", "0.9", "--ne", "0.02", "--ni", "0.02"],
        capsys,
    )
    assert code == 0
    cells = out.strip().split("\n")[1].split(",")
    assert float(cells[4]) == 0.0  # optimal brightness is the dark reference
    assert cells[6] == "119"


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_flags_single_point(capsys):
    code, out, _ = run(["sweep"] + HEADLINE_FLAGS, capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 2
    assert lines[1].split(",")[6] == "57"


def test_sweep_config_document(tmp_path, capsys):
    doc = {
        "protocols": ["direct", "coherent"],
        "xi": 0.1,
        "epsilon": 0.9,
        "eta": [0.9],
        "n_e": [1.0],
        "n_c": [6.0],
        "saturations": ["inf", 2],
    }
    cfg = tmp_path / "spec.json"
    cfg.write_text(json.dumps(doc))
    code, out, _ = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 1 + 4  # direct x 2 saturations + coherent x 2
    assert lines[1].split(",")[5] == "inf"
    assert lines[2].split(",")[5] == "2"


def test_sweep_preset_and_config_conflict(tmp_path, capsys):
    cfg = tmp_path / "spec.json"
    cfg.write_text("{}")
    code, _, err = run(["sweep", "--preset", "fig2a", "--config", str(cfg)], capsys)
    assert code == 2
    assert "not both" in err


def test_sweep_config_with_unknown_key_exits_cleanly(tmp_path, capsys):
    cfg = tmp_path / "spec.json"
    cfg.write_text('{"protocols": ["direct"], "noise": [1.0]}')
    code, _, err = run(["sweep", "--config", str(cfg)], capsys)
    assert code == 2
    assert err.startswith("error:")
    assert "noise" in err


def test_sweep_preset_runs(tmp_path, capsys):
    target = tmp_path / "fig2b.csv"
    code, _, _ = run(["sweep", "--preset", "fig2b", "-o", str(target)], capsys)
    assert code == 0
    lines = target.read_text().strip().split("\n")
    # direct: 1 noise x 4 saturations; each interference protocol: 13 x 4
    assert len(lines) == 1 + 4 + 2 * 52


def test_sweep_unknown_preset_exits_two(capsys):
    with pytest.raises(SystemExit) as err:
        main(["sweep", "--preset", "fig9z"])
    assert err.value.code == 2
    capsys.readouterr()


def test_sweep_json_format(capsys):
    code, out, _ = run(["sweep", "--format", "json"] + HEADLINE_FLAGS, capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["rows"][0]["N"] == 57


# ---------------------------------------------------------------------------
# validate-oracle
# ---------------------------------------------------------------------------


def test_validate_oracle_passes(capsys):
    code, out, _ = run(
        ["validate-oracle", "--nc", "1", "--xi", "0.1", "--eta", "0.8",
         "--epsilon", "0.9", "--ne", "0.02", "--ni", "0.02"],
        capsys,
    )
    assert code == 0
    assert out.startswith("PASS")
    assert "tolerance" in out


def test_validate_oracle_fails_at_zero_tolerance(capsys):
    code, out, _ = run(["validate-oracle", "--nc", "1", "--tol", "0"], capsys)
    assert code == 1
    assert out.startswith("FAIL")


def test_validate_oracle_rejects_bright_reference(capsys):
    code, _, err = run(["validate-oracle", "--nc", "9"], capsys)
    assert code == 2
    assert "n_c" in err


# ---------------------------------------------------------------------------
# config and flag equivalence
# ---------------------------------------------------------------------------


def test_config_equals_flags(tmp_path, capsys):
    cfg = tmp_path / "params.json"
    cfg.write_text(json.dumps({
        "protocol": "coherent", "xi": 0.1, "eta": 0.9, "epsilon": 0.9,
        "n_c": 6.0, "n_e": 1.0, "n_i": 1.0,
    }))
    _, by_flags, _ = run(["nmeas"] + HEADLINE_FLAGS, capsys)
    _, by_config, _ = run(["nmeas", "--config", str(cfg)], capsys)
    assert by_flags == by_config


def test_explicit_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "params.json"
    cfg.write_text(json.dumps({"protocol": "direct", "xi": 0.1, "eta": 0.8,
                               "n_e": 1.0, "n_i": 1.0}))
    _, base, _ = run(["nmeas", "--config", str(cfg)], capsys)
    _, overridden, _ = run(["nmeas", "--config", str(cfg), "--ne", "0.02", "--ni", "0.02"], capsys)
    assert int(base.strip().split("\n")[1].split(",")[6]) == 3254
    assert int(overridden.strip().split("\n")[1].split(",")[6]) == 117


def test_missing_config_file_exits_two(capsys):
    code, _, err = run(["nmeas", "--config", "/nonexistent/params.json"], capsys)
    assert code == 2
    assert "error" in err


# ---------------------------------------------------------------------------
# installed entry point
# ---------------------------------------------------------------------------


def test_console_script_matches_module():
    result = subprocess.run(
        [sys.executable, "-m", "homdetect.cli", "nmeas"] + LOW_FLAGS,
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.strip().split("\n")[1].split(",")[6] == "117"
