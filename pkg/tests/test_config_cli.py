import csv
import json
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest

from jtwpa import __version__
from jtwpa.cli import main
from jtwpa.config import load_config
from jtwpa.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = str(files("jtwpa") / "data" / "golden_single_mode.csv")


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- config


def test_defaults_build_the_device():
    cfg = load_config()
    p = cfg.circuit_params()
    assert p.n_cells == 3141 and p.tan_delta == 4.9e-3
    assert p.pump_freqs == (5.2984e9, 8.109e9)
    assert cfg.loss_profile() is None


def test_overrides_and_hash(tmp_path):
    a = load_config(overrides=["circuit.tan_delta=0", "loss.kind=distributed", "loss.total_db=-5"])
    assert a.circuit.tan_delta == 0.0 and a.loss_profile().total_db == -5.0
    b = load_config(overrides=["circuit.tan_delta=0", "loss.kind=distributed", "loss.total_db=-5"])
    assert a.hash() == b.hash() != load_config().hash()


@pytest.mark.parametrize(
    "over",
    [
        ["circuit.n_cells=0"],
        ["circuit.bogus=1"],
        ["loss.total_db=3"],
        ["loss.kind=weird"],
        ["schema_version=2"],
        ["pumps.p_nw=1"],
        ["noequals"],
    ],
)
def test_invalid_configs(over):
    with pytest.raises(ConfigError):
        load_config(overrides=over)


def test_unreadable_config(tmp_path):
    bad = tmp_path / "c.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


@pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "configs").glob("*.json")))
def test_shipped_configs_validate(name):
    load_config(ROOT / "configs" / name)


# ---------------------------------------------------------------- subcommands


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


def test_dispersion_csv(tmp_path):
    code, out = run(tmp_path, "dispersion", "--set", "simulation.f_start_ghz=6.0", "--set", "simulation.f_stop_ghz=7.0", "--set", "simulation.f_step_ghz=0.5")
    assert code == 0
    rows = read_csv(out / "dispersion.csv")
    assert [float(r["frequency_ghz"]) for r in rows] == [6.0, 6.5, 7.0]
    rep = json.loads((out / "dispersion.report.json").read_text())
    assert rep["subcommand"] == "dispersion" and rep["schema_version"] == 1 and len(rep["config_hash"]) == 64


def test_phasematch_json(tmp_path):
    code, out = run(tmp_path, "phasematch", "--format", "json", "--set", "pumps.beta=0.1", "--set", "simulation.f_signal_ghz=6.5")
    # list-valued keys cannot be overridden
    assert code == 2
    code, out = run(tmp_path, "phasematch", "--format", "json", "--config", str(ROOT / "configs" / "gain_lossless.json"))
    assert code == 0
    doc = json.loads((out / "phasematch.json").read_text())
    assert doc["columns"] == ["f_signal_ghz", "process", "delta_k_rad_per_cell"]
    assert {r[1] for r in doc["rows"]} == {"PA", "DFWM1", "DFWM2", "FC1", "FC2"}


def test_gain_lossless(tmp_path):
    code, out = run(tmp_path, "gain", "--config", str(ROOT / "configs" / "gain_lossless.json"))
    assert code == 0
    rows = read_csv(out / "gain.csv")
    assert len(rows) == 5 and all(float(r["gain_db"]) > 10 for r in rows)


def test_pser(tmp_path):
    code, out = run(tmp_path, "pser", "--config", str(ROOT / "configs" / "gain_lossless.json"), "--set", "simulation.theta_points=181")
    assert code == 0
    rep = json.loads((out / "pser.report.json").read_text())
    assert rep["pser_db"] > 20
    assert len(read_csv(out / "pser.csv")) == 181


def test_pser_needs_depth_zero(tmp_path):
    code, _ = run(tmp_path, "pser", "--config", str(ROOT / "configs" / "gain_lossless.json"), "--set", "simulation.depth=1")
    assert code == 2


def test_squeeze_pumps_off(tmp_path):
    code, out = run(tmp_path, "squeeze", "--set", "simulation.f_signal_ghz=6.5", "--set", "circuit.tan_delta=0")
    assert code == 0
    res = json.loads((out / "squeeze.json").read_text())["result"]
    assert res["s_min_db"] == pytest.approx(0.0, abs=1e-9)
    assert res["purity"] == pytest.approx(1.0, abs=1e-9)
    assert res["gain_db"] == pytest.approx(0.0, abs=1e-9)


def test_sweep_deterministic(tmp_path):
    cfg = str(ROOT / "configs" / "sweep_saturable.json")
    args = ["sweep", "--config", cfg, "--set", "simulation.depth=0"]
    code, out = run(tmp_path, *args)
    assert code == 0
    first = (out / "sweep.csv").read_text()
    code2 = main([*args, "--out", str(tmp_path / "b"), "--threads", "2"])
    assert code2 == 0
    assert (tmp_path / "b" / "sweep.csv").read_text() == first
    header = first.splitlines()[0]
    assert header == "p2_nw,f_signal_ghz,gain_db,squeeze_db,antisqueeze_db,purity,loss_model"


def test_analyze_golden(tmp_path):
    code, out = run(tmp_path, "analyze", "--config", str(ROOT / "configs" / "analyze_golden.json"), "--set", f"paths.quadrature_data={GOLDEN}")
    assert code == 0
    rep = json.loads((out / "analyze.json").read_text())["report"]
    assert rep["alpha_quanta_per_mv2"] == pytest.approx(0.129052, abs=1e-6)
    assert rep["squeeze_db"] == pytest.approx(-11.16, abs=0.01)
    assert rep["antisqueeze_db"] == pytest.approx(15.74, abs=0.01)
    assert rep["eta_bounds"]["eta_low"]["squeeze_db"] < rep["squeeze_db"]


def test_generate_and_calibrate_chain(tmp_path):
    out = tmp_path / "out"
    for kind in ("sntj", "wqed", "quadrature"):
        assert main(["generate", kind, "--seed", "3", "--out", str(out)]) == 0
    cal = str(ROOT / "configs" / "calibration.json")
    sets = [
        "--set", f"paths.sntj_csv={out / 'sntj.csv'}",
        "--set", f"paths.wqed_csv={out / 'wqed.csv'}",
        "--set", f"paths.sntj_report={out / 'calibrate-sntj.json'}",
        "--set", f"paths.wqed_report={out / 'calibrate-wqed.json'}",
    ]
    assert main(["calibrate-sntj", "--config", cal, *sets, "--out", str(out)]) == 0
    fit = json.loads((out / "calibrate-sntj.json").read_text())["fit"]
    assert fit["t_noise"] == pytest.approx(2.5, rel=0.03)
    assert main(["calibrate-wqed", "--config", cal, *sets, "--out", str(out)]) == 0
    w = json.loads((out / "calibrate-wqed.json").read_text())
    assert w["fit"]["gamma1"] == pytest.approx(1e6, rel=0.02)
    # generator puts 60 dB between input and qubit; rows with Ω << √(Γ₁Γ₂) barely move t
    assert [r["attenuation_db"] for r in w["rows"][2:]] == pytest.approx([-60.0] * 4, abs=0.5)
    assert main(["cross-cal", "--config", cal, *sets, "--out", str(out)]) == 0
    cc = json.loads((out / "cross-cal.json").read_text())["corrected"][0]
    assert cc["t_sys"] == pytest.approx(cc["t_sys_uncorrected"] * 10 ** (-cc["delta_a_db"] / 10), rel=1e-12)
    assert main(["analyze", "--set", f"paths.quadrature_data={out / 'quadrature.csv'}", "--out", str(out)]) == 0


def test_generate_is_seeded(tmp_path):
    main(["generate", "sntj", "--seed", "5", "--out", str(tmp_path / "a")])
    main(["generate", "sntj", "--seed", "5", "--out", str(tmp_path / "b")])
    main(["generate", "sntj", "--seed", "6", "--out", str(tmp_path / "c")])
    a = (tmp_path / "a" / "sntj.csv").read_text()
    assert a == (tmp_path / "b" / "sntj.csv").read_text() != (tmp_path / "c" / "sntj.csv").read_text()


def test_binary_dataset_is_accepted(tmp_path):
    from jtwpa.analysis import QuadratureDataset

    p = tmp_path / "g.f64"
    QuadratureDataset.from_csv(GOLDEN).to_binary(p)
    code, out = run(tmp_path, "analyze", "--set", f"paths.quadrature_data={p}")
    assert code == 0
    assert json.loads((out / "analyze.json").read_text())["report"]["squeeze_db"] == pytest.approx(-11.16, abs=0.01)


# ---------------------------------------------------------------- errors


def test_missing_input_is_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "analyze")
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and "quadrature_data" in err["message"]


def test_stopband_signal_is_runtime_error(tmp_path, capsys):
    code, _ = run(tmp_path, "squeeze", "--set", "circuit.tan_delta=0", "--set", "simulation.f_signal_ghz=5.2707")
    assert code == 1
    assert json.loads(capsys.readouterr().err)["error"] == "StopbandError"


def test_bad_threads(tmp_path):
    code, _ = run(tmp_path, "dispersion", "--threads", "0")
    assert code == 2


def test_gain_rows_record_errors(tmp_path):
    code, out = run(tmp_path, "gain", "--set", "circuit.tan_delta=0", "--set", "simulation.f_start_ghz=5.2707", "--set", "simulation.f_stop_ghz=5.2707")
    assert code == 0
    rows = read_csv(out / "gain.csv")
    assert rows[0]["error"].startswith("StopbandError") and np.isnan(float(rows[0]["gain_db"]))
