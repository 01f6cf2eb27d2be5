"""Command-line interface: config parsing, subcommands, exit codes."""

import json

import numpy as np
import pytest

from modcs.cli import UsageError, build_spec, main, parse_config_text

SMALL_CONFIG = """\
# small smoke experiment
m = 30
s0 = 5
sa = 1
r = 1
n = 15
noise_c = 0.05
algorithms = modcs, simple-cs   # both use the single threshold
alpha = 0.45
horizon = 3
trials = 2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG)
    return path


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def test_parse_config_text_strips_comments_and_blanks():
    mapping = parse_config_text(SMALL_CONFIG)
    assert mapping["m"] == "30"
    assert mapping["algorithms"] == "modcs, simple-cs"
    assert "#" not in mapping.get("alpha", "#")


def test_parse_config_text_rejects_bare_words():
    with pytest.raises(UsageError, match="line 2"):
        parse_config_text("m = 30\nnot a setting\n")


def test_build_spec_minimal():
    spec = build_spec(parse_config_text(SMALL_CONFIG))
    assert spec.model.m == 30 and spec.model.s0 == 5
    assert spec.n == 15 and spec.trials == 2 and spec.horizon == 3
    assert [c.algorithm for c in spec.algorithms] == ["modcs", "simple-cs"]
    assert all(c.alpha == 0.45 for c in spec.algorithms)


def test_build_spec_accepts_fractions_and_noise_none():
    spec = build_spec({"m": "30", "s0": "5", "sa": "1", "r": "2/3",
                       "n": "15", "noise": "none", "algorithms": "modcs",
                       "alpha": "0.4"})
    assert spec.model.r == pytest.approx(2.0 / 3.0)
    assert spec.noise_c == 0.0


def test_build_spec_solver_epsilon_applies_to_all_algorithms():
    mapping = parse_config_text(SMALL_CONFIG)
    assert all(c.epsilon is None
               for c in build_spec(mapping).algorithms)
    mapping["solver_epsilon"] = "0.11"
    spec = build_spec(mapping)
    assert all(c.epsilon == pytest.approx(0.11) for c in spec.algorithms)


@pytest.mark.parametrize("changes", [
    {"m": None},                       # drop a required key
    {"noise_c": None},                 # no noise level at all
    {"generator": "walk"},             # unknown generator
    {"algorithms": "warp-drive"},      # unknown algorithm
    {"alpha": None},                   # modcs without its threshold
    {"frobnicate": "1"},               # unknown key
    {"m": "thirty"},                   # unparseable int
], ids=["missing-key", "no-noise", "bad-generator", "bad-algorithm",
        "missing-alpha", "unknown-key", "bad-int"])
def test_build_spec_rejects_bad_configs(changes):
    mapping = parse_config_text(SMALL_CONFIG)
    for key, value in changes.items():
        if value is None:
            mapping.pop(key, None)
        else:
            mapping[key] = value
    with pytest.raises(UsageError):
        build_spec(mapping)


def test_build_spec_add_ls_del_needs_both_thresholds():
    mapping = parse_config_text(SMALL_CONFIG)
    mapping["algorithms"] = "modcs-add-ls-del"
    mapping["alpha_add"] = "0.1"
    with pytest.raises(UsageError, match="alpha_del"):
        build_spec(mapping)
    mapping["alpha_del"] = "0.5"
    spec = build_spec(mapping)
    assert spec.algorithms[0].alpha_del == 0.5


# ---------------------------------------------------------------------------
# subcommands (exit code 0)
# ---------------------------------------------------------------------------


def test_simulate_runs_and_writes_outputs(config_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(config_file),
                 "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "simulate: 2 trials x 3 steps" in text
    for fname in ("metrics.csv", "diagnostics.csv", "nmse.csv",
                  "misses.csv", "extras.csv", "manifest.json"):
        assert (out / fname).exists()


def test_simulate_set_overrides_config(config_file, tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    main(["simulate", "--config", str(config_file), "--out", str(out1)])
    main(["simulate", "--config", str(config_file), "--out", str(out2)])
    assert (out1 / "metrics.csv").read_bytes() == \
        (out2 / "metrics.csv").read_bytes()
    out3 = tmp_path / "c"
    assert main(["simulate", "--config", str(config_file),
                 "--set", "master_seed=5", "--out", str(out3)]) == 0
    assert (out3 / "metrics.csv").read_bytes() != \
        (out1 / "metrics.csv").read_bytes()


def test_simulate_from_set_flags_only(tmp_path):
    args = ["simulate", "--out", str(tmp_path / "run")]
    for kv in ("m=30", "s0=5", "sa=1", "r=1", "n=15", "noise=none",
               "algorithms=modcs", "alpha=0.45", "horizon=2", "trials=1"):
        args += ["--set", kv]
    assert main(args) == 0
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["spec"]["trials"] == 1


def test_benchmark_tiny_panel(tmp_path, capsys):
    out = tmp_path / "panel"
    assert main(["benchmark", "--panel", "a", "--trials", "1",
                 "--horizon", "2", "--algorithms", "modcs",
                 "--out", str(out)]) == 0
    assert "benchmark panel a: n=65" in capsys.readouterr().out
    assert (out / "metrics.csv").exists()


def test_check_report_with_gaussian_matrix(tmp_path, capsys):
    csv_path = tmp_path / "report.csv"
    code = main(["check", "--report", "modcs-stability",
                 "--s0", "3", "--sa", "0", "--epsilon", "0.1", "--r", "1.0",
                 "--gaussian", "8,16,0", "--mode", "sampled",
                 "--samples", "200", "--csv", str(csv_path),
                 "--out", str(tmp_path)])
    assert code == 0
    text = capsys.readouterr().out
    assert "ric-union" in text
    assert csv_path.exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "check"
    assert manifest["params"]["status"] in ("holds", "undetermined", "fails")


def test_check_exhaustive_matrix_file(tmp_path, capsys):
    A = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)))[0]
    A = np.hstack([A, A[:, :1]])  # duplicated column -> delta(2) = 1
    path = tmp_path / "A.csv"
    np.savetxt(path, A, delimiter=",")
    code = main(["check", "--report", "modcs-stability",
                 "--s0", "1", "--sa", "1", "--epsilon", "0.0", "--r", "1.0",
                 "--matrix", str(path), "--out", str(tmp_path)])
    assert code == 0
    assert "fails" in capsys.readouterr().out


def test_ric_subcommand(tmp_path, capsys):
    assert main(["ric", "--gaussian", "6,12,0", "--s", "2",
                 "--theta", "2,1", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "matrix: 6 x 12" in text
    assert "delta(2)" in text and "theta(2,1)" in text
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["params"]["estimates"]) == 2


def test_zeta_subcommand(tmp_path, capsys):
    assert main(["zeta", "--m", "30", "--s0", "5", "--sa", "1",
                 "--n", "14", "--trials", "3", "--horizon", "4",
                 "--out", str(tmp_path)]) == 0
    assert "zeta estimate:" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert 0.0 < manifest["params"]["zeta"] <= 1.0 + 1e-12
    assert manifest["params"]["n_used"] == 14


# ---------------------------------------------------------------------------
# exit codes 1 and 2
# ---------------------------------------------------------------------------


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["simulate"]) == 1                       # nothing to run
    assert main(["simulate", "--config",
                 str(tmp_path / "missing.cfg")]) == 1    # file not found
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL_CONFIG + "frobnicate = 1\n")
    assert main(["simulate", "--config", str(bad)]) == 1  # unknown key
    assert main(["check", "--report", "modcs-stability", "--s0", "3",
                 "--sa", "1", "--epsilon", "0.1", "--r", "1.0"]) == 1
    assert main(["benchmark", "--panel", "a", "--trials", "1",
                 "--horizon", "1", "--algorithms", "warp-drive"]) == 1
    err = capsys.readouterr().err
    assert "modcs: error:" in err


def test_argparse_errors_raise_systemexit_1():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--no-such-flag"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["benchmark", "--panel", "q"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1


def test_runtime_failures_exit_2(tmp_path, capsys):
    garbage = tmp_path / "A.csv"
    garbage.write_text("not,a\nnumber,grid\n")
    code = main(["ric", "--matrix", str(garbage), "--s", "1",
                 "--out", str(tmp_path)])
    assert code == 2
    assert "modcs:" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
