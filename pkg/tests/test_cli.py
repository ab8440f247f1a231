"""Command line interface tests.

Everything goes through cli.main(argv) in process so exit codes and
printed output are checked exactly as a shell user would see them.
"""

import json
import shutil
import subprocess

import pytest

from revlin import cli

MH_GOOD = "mh:a=1,q=1"
MH_WEAK = "mh:a=0.4,q=0.2"


def base_config(**experiment):
    doc = {
        "chain": {"kind": "gaussian", "r": 0.5, "coeffs": [1.0]},
        "family": {"variant": "delta"},
        "experiment": {"mode": "clt", "n": 64, "replicates": 2000, "seed": 42},
    }
    doc["experiment"].update(experiment)
    return doc


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def read_report(outdir):
    return json.loads((outdir / "report.json").read_text(encoding="utf-8"))


def test_oracle_prints_targets_and_conditions(capsys):
    rc = cli.main(["oracle", "--chain", MH_GOOD])
    assert rc == cli.EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["targets"]["sigma2"] == pytest.approx(2.0 / 3.0, rel=1e-12)
    assert doc["targets"]["sigma2_alt"] == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert doc["targets"]["two_pi_h0"] == pytest.approx(1.3, rel=1e-12)
    assert doc["targets"]["blocked_sum"] == pytest.approx(8.0 / 3.0, rel=1e-12)
    assert set(doc["conditions"]) == {"abscov", "g1", "mgen", "sr"}
    for entry in doc["conditions"].values():
        assert set(entry) >= {"applicable", "passed", "note"}
    assert doc["notes"]


def test_oracle_strict_passes_on_good_chain(capsys):
    rc = cli.main(["oracle", "--chain", MH_GOOD, "--strict"])
    assert rc == cli.EXIT_PASS
    capsys.readouterr()


def test_oracle_strict_fails_on_weak_chain(capsys):
    # without --strict the failing conditions are informational only
    assert cli.main(["oracle", "--chain", MH_WEAK]) == cli.EXIT_PASS
    capsys.readouterr()
    rc = cli.main(["oracle", "--chain", MH_WEAK, "--strict"])
    captured = capsys.readouterr()
    assert rc == cli.EXIT_FAIL
    assert "conditions failed" in captured.err
    assert "sr" in captured.err
    doc = json.loads(captured.out)
    assert doc["conditions"]["sr"]["passed"] is False


def test_oracle_group_chain_shorthand(capsys):
    rc = cli.main(["oracle", "--chain", "group:m=6,steps=1|5,fourier=1:0.5"])
    assert rc == cli.EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["targets"]["two_pi_h0"] == pytest.approx(27.0 / 8.0, rel=1e-10)
    assert doc["targets"]["blocked_sum"] == pytest.approx(6.0, rel=1e-10)


def test_oracle_needs_a_chain(capsys):
    rc = cli.main(["oracle"])
    assert rc == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_run_pass_writes_report_and_csv(tmp_path, capsys):
    doc = base_config()
    doc["output"] = {"csv": True}
    cfg = write_config(tmp_path, doc)
    rc = cli.main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    captured = capsys.readouterr()
    assert rc == cli.EXIT_PASS
    assert "clt.variance_ratio: pass" in captured.out
    assert "clt.ks: pass" in captured.out
    assert "report:" in captured.out
    report = read_report(tmp_path / "out")
    assert report["schema"] == "revlin-report/1"
    assert report["verdicts"]["variance_ratio"] == "pass"
    csv_lines = (tmp_path / "out" / "samples.csv").read_text().splitlines()
    assert csv_lines[0] == "replicate,label,value"
    assert len(csv_lines) == 1 + 2000


def test_run_inconclusive_exit_code(tmp_path, capsys):
    # 500 replicates leave the variance check inside its 3 se band
    cfg = write_config(tmp_path, base_config(replicates=500))
    rc = cli.main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    capsys.readouterr()
    assert rc == cli.EXIT_INCONCLUSIVE
    report = read_report(tmp_path / "out")
    assert report["verdicts"]["variance_ratio"] == "inconclusive"
    assert not (tmp_path / "out" / "samples.csv").exists()


def test_run_condition_gate_writes_partial_report(tmp_path, capsys):
    doc = base_config(mode="blocks", replicates=200)
    doc["chain"] = {"kind": "mh", "a": 0.4, "q": 0.2}
    cfg = write_config(tmp_path, doc)
    rc = cli.main(["run", "--config", cfg, "--out", str(tmp_path / "out")])
    captured = capsys.readouterr()
    assert rc == cli.EXIT_FAIL
    assert "error:" in captured.err
    report = read_report(tmp_path / "out")
    assert report["verdicts"]["conditions"] == "fail"


def test_run_seed_override(tmp_path, capsys):
    cfg = write_config(tmp_path, base_config(replicates=500))
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) in (
        cli.EXIT_PASS,
        cli.EXIT_INCONCLUSIVE,
    )
    # hex and decimal spellings of the config seed reproduce the run
    assert cli.main(
        ["run", "--config", cfg, "--seed", "0x2a", "--out", str(tmp_path / "b")]
    ) in (cli.EXIT_PASS, cli.EXIT_INCONCLUSIVE)
    assert cli.main(
        ["run", "--config", cfg, "--seed", "7", "--out", str(tmp_path / "c")]
    ) in (cli.EXIT_PASS, cli.EXIT_INCONCLUSIVE)
    capsys.readouterr()
    a = read_report(tmp_path / "a")
    b = read_report(tmp_path / "b")
    c = read_report(tmp_path / "c")
    assert a["statistics"] == b["statistics"]
    assert a["statistics"] != c["statistics"]
    assert c["seed"] == 7


def test_run_threads_do_not_change_statistics(tmp_path, capsys):
    cfg = write_config(tmp_path, base_config(replicates=500))
    cli.main(["run", "--config", cfg, "--threads", "1", "--out", str(tmp_path / "t1")])
    cli.main(["run", "--config", cfg, "--threads", "8", "--out", str(tmp_path / "t8")])
    capsys.readouterr()
    one = read_report(tmp_path / "t1")
    many = read_report(tmp_path / "t8")
    for key in ("statistics", "standard_errors", "targets", "verdicts"):
        assert one[key] == many[key]


def test_run_needs_config(capsys):
    rc = cli.main(["run"])
    assert rc == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_coeffs_writes_csvs_and_summary(tmp_path, capsys):
    rc = cli.main(
        [
            "coeffs",
            "--family",
            "frac_int:d=0.25",
            "--n",
            "32",
            "--eps",
            "1e-2",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == cli.EXIT_PASS
    doc = json.loads(capsys.readouterr().out)
    assert doc["variant"] == "frac_int"
    assert doc["beta"] == pytest.approx(1.5, rel=1e-12)
    assert doc["beta_hat"] == pytest.approx(1.5, abs=0.1)
    assert doc["tail_fraction"] <= 1e-2
    j_min, j_max = doc["window"]
    wlines = (tmp_path / "weights.csv").read_text().splitlines()
    assert wlines[0] == "j,b_nj"
    assert len(wlines) == 1 + (j_max - j_min + 1)
    assert wlines[1].startswith(f"{j_min},")
    clines = (tmp_path / "coeffs.csv").read_text().splitlines()
    assert clines[0] == "i,a_i"
    assert clines[1].startswith("0,")
    # weights are partial sums of coefficients, so spot check one row
    first_weight = float(wlines[1].split(",")[1])
    assert first_weight != 0.0


def test_coeffs_rejects_oversized_csv(tmp_path, capsys):
    rc = cli.main(
        [
            "coeffs",
            "--family",
            "frac_int:d=0.25",
            "--n",
            "1000",
            "--eps",
            "3e-3",
            "--out",
            str(tmp_path),
        ]
    )
    captured = capsys.readouterr()
    assert rc == cli.EXIT_CONFIG
    assert "too large" in captured.err
    assert not (tmp_path / "weights.csv").exists()


def test_coeffs_needs_family_or_config(capsys):
    rc = cli.main(["coeffs"])
    assert rc == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_check_reports_config_summary(tmp_path, capsys):
    cfg = write_config(tmp_path, base_config())
    rc = cli.main(["check", "--config", cfg])
    out = capsys.readouterr().out
    assert rc == cli.EXIT_PASS
    assert out.startswith("ok: clt run, chain=gaussian, family=delta")


def test_missing_config_file(tmp_path, capsys):
    rc = cli.main(["check", "--config", str(tmp_path / "absent.json")])
    assert rc == cli.EXIT_CONFIG
    assert "cannot read config" in capsys.readouterr().err


def test_config_must_be_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    rc = cli.main(["check", "--config", str(path)])
    assert rc == cli.EXIT_CONFIG
    assert "not valid JSON" in capsys.readouterr().err


def test_config_schema_rejects_unknown_keys(tmp_path, capsys):
    doc = base_config()
    doc["extra"] = 1
    rc = cli.main(["check", "--config", write_config(tmp_path, doc)])
    assert rc == cli.EXIT_CONFIG
    assert "schema error" in capsys.readouterr().err


def test_config_schema_rejects_wrong_chain_shape(tmp_path, capsys):
    doc = base_config()
    doc["chain"] = {"kind": "mh", "a": 1.0}
    rc = cli.main(["check", "--config", write_config(tmp_path, doc)])
    assert rc == cli.EXIT_CONFIG
    assert "schema error" in capsys.readouterr().err


def test_unknown_tolerance_is_a_config_error(tmp_path, capsys):
    doc = base_config(tolerances={"bogus": 0.1})
    rc = cli.main(["check", "--config", write_config(tmp_path, doc)])
    assert rc == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "arg",
    [
        "mh:a=1",
        "weird:x=1",
        "mh:a=1;q=1",
        "gaussian:r=0.5,coeffs=0",
        "gaussian:r=2,coeffs=1",
    ],
)
def test_bad_chain_shorthand(arg, capsys):
    rc = cli.main(["oracle", "--chain", arg])
    assert rc == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("arg", ["frac_int:d=0.9", "nope", "frac_int:d=x"])
def test_bad_family_shorthand(arg, tmp_path, capsys):
    rc = cli.main(["coeffs", "--family", arg, "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG
    assert "error:" in capsys.readouterr().err


def test_console_script_is_installed():
    exe = shutil.which("revlin")
    assert exe is not None
    proc = subprocess.run(
        [exe, "oracle", "--chain", MH_GOOD],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["targets"]["sigma2"] == pytest.approx(2.0 / 3.0)
