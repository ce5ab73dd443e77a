import csv
import json
import math

import numpy as np
import pytest

from scarsim import cli, serialize
from scarsim.config import OUTPUT_ENV, ConfigError, RunConfig, parse_config


# -- configuration ------------------------------------------------------------


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = parse_config(path)
    assert cfg.to_dict() == RunConfig().to_dict()
    p = cfg.device_params()
    assert (p.J_mhz, p.Omega_mhz, p.alpha_mhz, p.freqs_ghz) == (3.8, 50.0, -330.0, (5.114, 4.914, 5.014))
    assert (cfg.L, cfg.T_ns, cfg.noise.samples) == (12, 16.0, 500)


def test_halving_period_halves_jt():
    base = parse_config()
    half = parse_config(overrides=["T_ns=8"])
    assert half.dimensionless_JT == pytest.approx(base.dimensionless_JT / 2)
    assert base.dimensionless_JT == pytest.approx(2 * math.pi * 3.8e-3 * 16)


def test_l10_rejected():
    with pytest.raises(ConfigError, match="L mod 3 = 0 required"):
        parse_config(overrides=["L=10"])


@pytest.mark.parametrize(
    "override",
    ["variant=ghz", "unknown=1", "noise.samples=0", "coefficient_source=fit", "device.J_mhz=2", "cut=12", "L=6.5"],
)
def test_invalid_overrides(override):
    with pytest.raises(ConfigError):
        parse_config(overrides=[override])


def test_eq6_allows_other_device():
    cfg = parse_config(overrides=["device.J_mhz=2", "coefficient_source=eq6"])
    assert cfg.device_params().J_mhz == 2.0


def test_yaml_and_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("variant: cluster\nL: 9\nnoise:\n  r_list: [0.0, 0.1]\n  t_meas_steps: 5\n")
    cfg = parse_config(path, ["noise.samples=7", "cut=4"])
    assert (cfg.variant, cfg.L, cfg.noise.r_list, cfg.noise.t_meas_steps) == ("cluster", 9, [0.0, 0.1], 5)
    assert (cfg.noise.samples, cfg.cut) == (7, 4)
    cfg = parse_config(overrides=["noise.r_list=0,0.02"])
    assert cfg.noise.r_list == [0.0, 0.02]


def test_output_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    assert parse_config().resolved_output_dir() == tmp_path / "env"
    assert parse_config(overrides=[f"output_dir={tmp_path}"]).resolved_output_dir() == tmp_path


# -- serialization ------------------------------------------------------------


def test_fmt_round_trip():
    x = 0.1 + 0.2
    assert float(serialize.fmt(x)) == x
    assert serialize.fmt(np.int64(3)) == "3"
    assert serialize.fmt(None) == ""
    assert serialize.fmt(True) == "true"


# -- CLI ----------------------------------------------------------------------


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def test_verify_exit_zero(capsys):
    code, out = run(["verify"], capsys)
    assert code == 0
    assert "FAIL" not in out.out
    assert out.out.count("[PASS]") >= 12


def test_validation_exit_one(capsys, tmp_path):
    code, out = run(["quench", "--set", "L=10", "-o", str(tmp_path)], capsys)
    assert code == 1
    assert "L mod 3 = 0 required" in out.err


def test_numeric_exit_two(monkeypatch, capsys, tmp_path):
    def boom(cfg, out):
        raise np.linalg.LinAlgError("did not converge")

    monkeypatch.setitem(cli.RUNNERS, "spectrum", boom)
    code, out = run(["spectrum", "--set", "L=6", "-o", str(tmp_path)], capsys)
    assert code == 2
    assert "numeric failure" in out.err


def test_quench_csv_header(capsys, tmp_path):
    code, _ = run(["quench", "--set", "L=6", "--set", "n_steps=4", "-o", str(tmp_path)], capsys)
    assert code == 0
    first = (tmp_path / "quench_scar.csv").read_text().splitlines()[0]
    assert first == "t_ns,step,fidelity,obs,s_vn,s_renyi2"
    with (tmp_path / "quench_deformed.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 5


def test_coeffs_writes_report(capsys, tmp_path):
    code, out = run(["coeffs", "-o", str(tmp_path)], capsys)
    assert code == 0 and "flag" in out.out
    header, rows = serialize.read_csv(tmp_path / "coefficients.csv")
    assert header == serialize.COEFF_HEADER and len(rows) == 24


def test_noise_manifest_records_seeds(capsys, tmp_path):
    argv = ["noise", "--set", "L=6", "--set", "noise.samples=3", "--set", "noise.r_list=0,0.02,0.05",
            "--seed", "99", "-o", str(tmp_path)]
    code, _ = run(argv, capsys)
    assert code == 0
    m = json.loads((tmp_path / "manifest_noise.json").read_text())
    assert m["trajectories"] == 2 * 3 + 1
    assert m["config"]["master_seed"] == 99
    assert len(m["seeds"]["0.02"]) == 3 and m["seeds"]["0.0"] == [None]
    assert m["coefficient_source"] == "table"
    assert set(m["outputs"]) == {"noise_summary.csv", "noise_samples.csv"}


def test_replay_reproduces_outputs(capsys, tmp_path):
    argv = ["noise", "--set", "L=6", "--set", "noise.samples=2", "--set", "noise.r_list=0.05", "-o", str(tmp_path)]
    assert run(argv, capsys)[0] == 0
    code, out = run(["replay", str(tmp_path / "manifest_noise.json")], capsys)
    assert code == 0 and "replay identical" in out.out

    # tamper with the recorded hash: replay must report the mismatch
    path = tmp_path / "manifest_noise.json"
    m = json.loads(path.read_text())
    m["outputs"]["noise_summary.csv"] = "0" * 64
    path.write_text(json.dumps(m))
    code, out = run(["replay", str(path)], capsys)
    assert code == 1 and "MISMATCH noise_summary.csv" in out.out


def test_plot_all_outputs(capsys, tmp_path):
    run(["quench", "--set", "L=6", "--set", "n_steps=3", "-o", str(tmp_path)], capsys)
    run(["spectrum", "--set", "L=6", "-o", str(tmp_path)], capsys)
    run(["noise", "--set", "L=6", "--set", "noise.samples=2", "--set", "noise.r_list=0,0.05", "-o", str(tmp_path)],
        capsys)
    run(["trotter-scan", "--set", "L=6", "--set", "scan.points=3", "--set", "scan.t_total_ns=200",
         "-o", str(tmp_path)], capsys)
    csvs = sorted(tmp_path.glob("*.csv"))
    code, out = run(["plot", *map(str, csvs)], capsys)
    assert code == 0
    for name in ("quench_scar", "quench_deformed", "spectrum", "noise_summary", "trotter_scan"):
        svg = (tmp_path / f"{name}.svg").read_text()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "not plotted" in out.out


def test_plot_unknown_csv(capsys, tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    code, out = run(["plot", str(path)], capsys)
    assert code == 1 and "unrecognized" in out.err


def test_verify_custom_weights(capsys):
    code, out = run(["verify", "--k", "1,2,-1,0.5,3,1", "--random-k", "3"], capsys)
    assert code == 0
    assert "parent H cluster L=6 given k + 3 random k" in out.out


def test_verify_zero_weight_is_validation_error(capsys):
    code, out = run(["verify", "--k", "1,0,1"], capsys)
    assert code == 1 and "nonzero" in out.err
