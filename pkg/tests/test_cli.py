import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dpsubmod.cli import NON_PRIVATE_BANNER, dump_toml, load_config_file, main, resolve_config
from dpsubmod.harness import RegretTrace


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_full_info_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(["--algorithm", "full-info", "--n", 3, "--horizons", "32,64",
                           "--trials", 2, "--epsilon", 1.0, "--out", out], capsys)
    assert code == 0
    assert "log-log slope" in stdout
    summary = json.loads((out / "summary.json").read_text())
    assert [r["T"] for r in summary["horizons"]] == [32, 64]
    assert summary["config"]["n"] == 3
    assert isinstance(summary["slope"], float)
    traces = sorted((out / "traces").iterdir())
    assert [p.name for p in traces] == ["T32_trial000.csv", "T32_trial001.csv",
                                        "T64_trial000.csv", "T64_trial001.csv"]
    tr = RegretTrace.from_csv(traces[0])
    assert tr.T == 32 and tr.metadata["config"]["trials"] == 2
    assert (out / "config.toml").exists()


def test_rerun_from_summary_reproduces(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["--algorithm", "bandit", "--n", 2, "--T", 64, "--trials", 2, "--seed", 7,
                "--out", a], capsys)[0] == 0
    assert run(["--config", a / "summary.json", "--out", b], capsys)[0] == 0
    for name in ("T64_trial000.csv", "T64_trial001.csv"):
        x = RegretTrace.from_csv(a / "traces" / name)
        y = RegretTrace.from_csv(b / "traces" / name)
        assert np.array_equal(x.sets, y.sets) and np.array_equal(x.costs, y.costs)
    sa = json.loads((a / "summary.json").read_text())
    sb = json.loads((b / "summary.json").read_text())
    assert sa["horizons"] == sb["horizons"]
    assert all(q == [64, 64] for q in [sa["horizons"][0]["oracle_queries"]])


def test_rerun_from_trace_and_toml(tmp_path, capsys):
    a = tmp_path / "a"
    run(["--n", 2, "--T", 16, "--trials", 1, "--seed", 3, "--out", a], capsys)
    from_trace = load_config_file(a / "traces" / "T16_trial000.csv")
    from_toml = load_config_file(a / "config.toml")
    assert from_trace["seed"] == from_toml["seed"] == 3
    assert from_trace["horizons"] == from_toml["horizons"] == [16]


def test_flags_override_config(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text(dump_toml({"n": 5, "trials": 3, "epsilon": "inf"}))
    cfg, _ = resolve_config(["--config", str(cfg_file), "--trials", "4"])
    assert cfg.n == 5 and cfg.trials == 4 and math.isinf(cfg.epsilon)


def test_nonprivate_banner(tmp_path, capsys):
    out = tmp_path / "np"
    code, stdout, _ = run(["--n", 2, "--T", 16, "--trials", 1, "--epsilon", "inf", "--out", out], capsys)
    assert code == 0 and NON_PRIVATE_BANNER in stdout
    assert json.loads((out / "summary.json").read_text())["banner"] == NON_PRIVATE_BANNER


@pytest.mark.parametrize("argv", [
    ["--epsilon", "0"],
    ["--epsilon", "-1"],
    ["--epsilon", "abc"],
    ["--n", "0"],
    ["--horizons", "64,32"],
    ["--trials", "0"],
    ["--algorithm", "bandit", "--gamma", "1.5"],
    ["--adversary-param", "oops"],
])
def test_invalid_configs_exit_nonzero(tmp_path, capsys, argv):
    code, _, err = run(argv + ["--out", tmp_path / "x"], capsys)
    assert code == 2 and "error" in err
    assert not (tmp_path / "x").exists()


def test_unknown_config_key(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('colour = "red"\n')
    code, _, err = run(["--config", bad], capsys)
    assert code == 2


def test_existing_output_needs_force(tmp_path, capsys):
    out = tmp_path / "o"
    args = ["--n", 2, "--T", 8, "--trials", 1, "--out", out]
    assert run(args, capsys)[0] == 0
    assert run(args, capsys)[0] == 2
    assert run(args + ["--force"], capsys)[0] == 0


def test_single_horizon_has_no_slope(tmp_path, capsys):
    out = tmp_path / "o"
    run(["--n", 2, "--T", 8, "--trials", 1, "--out", out], capsys)
    assert "slope" not in json.loads((out / "summary.json").read_text())


def test_adversary_params_pass_through(tmp_path, capsys):
    out = tmp_path / "o"
    code, _, _ = run(["--n", 3, "--T", 16, "--trials", 1, "--adversary", "switching",
                      "--adversary-param", "period=4", "--adversary-param", "planted=5", "--out", out],
                     capsys)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["adversary"]["params"] == {"period": 4, "planted": 5}


def test_tbap_standalone_noiseless(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("1 0\n0 1\n")
    code, stdout, _ = run(["--algorithm", "tbap-standalone", "--input", src, "--norm-bound", 1.5,
                           "--no-noise"], capsys)
    assert code == 0
    rows = [ln for ln in stdout.splitlines() if not ln.startswith("#")]
    assert rows == ["1.0,0.0", "1.0,1.0"]
    assert NON_PRIVATE_BANNER in stdout


def test_tbap_standalone_rejects_oversized(tmp_path, capsys):
    src = tmp_path / "in.txt"
    src.write_text("1 1\n")
    out = tmp_path / "sums.txt"
    code, _, err = run(["--algorithm", "tbap-standalone", "--input", src, "--output", out], capsys)
    assert code == 2 and "exceeds" in err
    assert not out.exists()


def test_verify_lemmas_mode(tmp_path, capsys):
    out = tmp_path / "lem"
    code, stdout, _ = run(["--algorithm", "verify-lemmas", "--instances", 50,
                           "--orthogonality-runs", 1000, "--out", out], capsys)
    assert code == 0
    assert stdout.count("PASS") == 4
    assert json.loads((out / "summary.json").read_text())["lemmas"]["passed"] is True


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "dpsubmod", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("dpsubmod ")
