"""Command-line entry point: ``jtwpa <subcommand> --config run.json --out dir``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    QuadratureAnalyzer,
    QuadratureDataset,
    eta_bounds_report,
    two_mode_report,
)
from .calibration import (
    SystemNoise,
    cross_calibrate_sntj,
    power_at_qubit,
    sntj_fit,
    system_noise_from_db,
    wqed_fit_2d,
)
from .circuit import dispersion_table
from .config import SCHEMA_VERSION, WorkbenchConfig, load_config
from .errors import ConfigError, JTWPAError
from .phasematch import mismatch_table
from .solver import partner_index, phase_sensitive_gain, simulate_point, sweep
from .units import H_PLANCK, K_B, dbm_to_watts, watts_to_dbm

log = logging.getLogger("jtwpa")

SWEEP_HEADER = ["p2_nw", "f_signal_ghz", "gain_db", "squeeze_db", "antisqueeze_db", "purity", "loss_model"]


class Run:
    """Output bookkeeping shared by all subcommands."""

    def __init__(self, name, cfg: WorkbenchConfig, out: Path, fmt: str):
        self.name, self.cfg, self.out, self.fmt = name, cfg, out, fmt
        out.mkdir(parents=True, exist_ok=True)

    def envelope(self, **body):
        return {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "subcommand": self.name,
            "config_hash": self.cfg.hash(),
            **body,
        }

    def write_json(self, body, suffix=""):
        path = self.out / f"{self.name}{suffix}.json"
        path.write_text(json.dumps(_jsonable(self.envelope(**body)), indent=2, sort_keys=False) + "\n")
        return path

    def write_table(self, header, rows, extra=None):
        """CSV (plus a small JSON report) or a single JSON document."""
        if self.fmt == "csv":
            path = self.out / f"{self.name}.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow([_fmt(v) for v in r])
            self.write_json({"table": path.name, "rows": len(rows), **(extra or {})}, suffix=".report")
            return path
        return self.write_json({"columns": header, "rows": [list(r) for r in rows], **(extra or {})})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return "" if v is None else str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _require(value, what):
    if value is None:
        raise ConfigError(f"config is missing {what}")
    return value


def _signal_freq(cfg: WorkbenchConfig):
    if cfg.simulation.f_signal_ghz is not None:
        return cfg.simulation.f_signal_ghz * 1e9
    return sum(cfg.pumps.f_ghz) / 2 * 1e9


def _signal_grid(cfg: WorkbenchConfig):
    if cfg.simulation.f_signal_grid_ghz:
        return np.array(cfg.simulation.f_signal_grid_ghz) * 1e9
    return cfg.simulation.freq_grid_hz()


# ---------------------------------------------------------------- subcommands


def cmd_dispersion(run: Run, args):
    table = dispersion_table(run.cfg.simulation.freq_grid_hz(), run.cfg.circuit_params())
    header = ["frequency_ghz", "k_real_rad_per_cell", "k_imag_rad_per_cell", "loss_db_total"]
    return run.write_table(header, [tuple(float(v) for v in r) for r in table])


def cmd_phasematch(run: Run, args):
    setup = run.cfg.setup()
    betas = [p.beta0 for p in setup.pump_states()]
    rows = mismatch_table(run.cfg.simulation.freq_grid_hz(), betas, setup.params)
    extra = {"betas": [abs(b) for b in betas]}
    return run.write_table(["f_signal_ghz", "process", "delta_k_rad_per_cell"], rows, extra)


def cmd_gain(run: Run, args):
    setup = run.cfg.setup()
    rows = sweep(setup, _signal_grid(run.cfg), threads=args.threads)
    out = [(r["f_signal_ghz"], r["gain_db"], r["error"]) for r in rows]
    extra = {"betas": [abs(p.beta0) for p in setup.pump_states()]}
    return run.write_table(["f_signal_ghz", "gain_db", "error"], out, extra)


def cmd_pser(run: Run, args):
    setup = run.cfg.setup()
    fc = sum(setup.params.pump_freqs) / 2
    system = setup.system(fc)
    if system.n != 1:
        raise ConfigError("phase-sensitive gain needs the degenerate single-mode set (depth 0)")
    thetas = np.linspace(0, np.pi, run.cfg.simulation.theta_points)
    gains, pser = phase_sensitive_gain(system, thetas, setup.rtol, setup.atol)
    rows = [(float(t), float(10 * np.log10(g))) for t, g in zip(thetas, gains)]
    return run.write_table(["theta_rad", "gain_db"], rows, {"pser_db": pser, "f_center_ghz": fc / 1e9})


def cmd_squeeze(run: Run, args):
    setup = run.cfg.setup()
    f = _signal_freq(run.cfg)
    res = simulate_point(setup, f)
    system = setup.system(f)
    body = {
        "f_signal_ghz": f / 1e9,
        "partner_index": partner_index(system.modes),
        "modes": system.modes.to_dict(),
        "betas": [abs(p.beta0) for p in system.pumps],
        "loss": None if setup.loss is None else setup.loss.to_dict(),
        "result": res,
    }
    return run.write_json(body)


def cmd_sweep(run: Run, args):
    cfg = run.cfg
    setup = cfg.setup()
    p2 = None if not cfg.simulation.p2_grid_nw else np.array(cfg.simulation.p2_grid_nw) * 1e-9
    if p2 is not None and setup.powers_w is None:
        raise ConfigError("a pump-2 power sweep needs pumps.p_nw and pumps.c_p_per_w")
    rows = sweep(setup, _signal_grid(cfg), p2, threads=args.threads)
    model = cfg.loss.kind
    table = []
    for r in rows:
        p = r["p2_nw"] if r["p2_nw"] is not None else (cfg.pumps.p_nw[1] if cfg.pumps.p_nw else float("nan"))
        table.append((float(p), r["f_signal_ghz"], r["gain_db"], r["s_min_db"], r["s_max_db"], r["purity"], model))
    errors = [{"row": i, "error": r["error"]} for i, r in enumerate(rows) if r["error"]]
    return run.write_table(SWEEP_HEADER, table, {"errors": errors, "points": rows})


def _load_dataset(path):
    p = Path(path)
    if p.suffix.lower() in (".bin", ".f64", ".dat"):
        return QuadratureDataset.from_binary(p)
    return QuadratureDataset.from_csv(p)


def cmd_analyze(run: Run, args):
    cfg = run.cfg
    ds = _load_dataset(_require(cfg.paths.quadrature_data, "paths.quadrature_data"))
    a = cfg.analysis
    if a.mode == "two_mode":
        grid = np.deg2rad(np.arange(0.0, 360.0, a.phi_step_deg))
        rep = two_mode_report(ds, a.eta_meas, a.n_bar, grid)
    else:
        model = QuadratureAnalyzer(a.eta_meas, a.n_bar).fit(ds.cell("off", "single"))
        rep = model.report(ds.cell("on", "single"))
        if a.eta_meas_low is not None and a.eta_meas_high is not None:
            rep["eta_bounds"] = eta_bounds_report(
                rep["dV2_min_mv2"], rep["dV2_max_mv2"], rep["dV2_off_mv2"], a.eta_meas, a.eta_meas_low, a.eta_meas_high, a.n_bar
            )
    return run.write_json({"metadata": ds.metadata, "report": rep})


def _read_csv(path, columns):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in columns):
            raise ConfigError(f"{path}: header must contain {','.join(columns)}")
        rows = list(reader)
    return {c: np.array([float(r[c]) for r in rows]) for c in columns}


def cmd_calibrate_sntj(run: Run, args):
    cfg = run.cfg.calibration
    data = _read_csv(_require(run.cfg.paths.sntj_csv, "paths.sntj_csv"), ["v_bias_uv", "noise_dbm"])
    f = cfg.freq_ghz * 1e9
    fit = sntj_fit(data["v_bias_uv"] * 1e-6, dbm_to_watts(data["noise_dbm"]), f, cfg.bandwidth_hz)
    eta = H_PLANCK * f / (2 * K_B * fit.t_noise)
    noise = SystemNoise(float(10 * np.log10(fit.gain)), fit.t_noise, float(eta), f)
    return run.write_json({"fit": fit.as_dict(), "system_noise": [noise.as_dict()]})


def cmd_calibrate_wqed(run: Run, args):
    cfg = run.cfg.calibration
    data = _read_csv(_require(run.cfg.paths.wqed_csv, "paths.wqed_csv"), ["detuning_mhz", "power_dbm", "s21_real", "s21_imag"])
    powers = np.unique(data["power_dbm"])
    row = np.searchsorted(powers, data["power_dbm"])
    fit = wqed_fit_2d(data["detuning_mhz"] * 1e6, row, data["s21_real"] + 1j * data["s21_imag"], xi=cfg.xi)
    fq = _require(cfg.qubit_freq_ghz, "calibration.qubit_freq_ghz") * 1e9
    p_q, att = power_at_qubit(np.array(fit.omega_drive), fit.gamma1, fq, dbm_to_watts(powers))
    body = {
        "fit": fit.as_dict(),
        "rows": [
            {"power_dbm": float(p), "omega_drive_hz": float(o), "p_qubit_w": float(pq), "attenuation_db": float(10 * np.log10(a)) if a > 0 else None}
            for p, o, pq, a in zip(powers, fit.omega_drive, np.atleast_1d(p_q), np.atleast_1d(att))
        ],
    }
    if cfg.p_rt_cal_dbm is not None and cfg.p_noise_rt_dbm is not None:
        ref = min(cfg.reference_row, len(powers) - 1)
        g_db = cfg.p_rt_cal_dbm - float(watts_to_dbm(np.atleast_1d(p_q)[ref]))
        noise = system_noise_from_db(g_db, cfg.p_noise_rt_dbm, cfg.bandwidth_hz, fq)
        body["system_noise"] = [noise.as_dict()]
    return run.write_json(body)


def _system_noise_records(path):
    doc = json.loads(Path(path).read_text())
    recs = doc.get("system_noise", doc if isinstance(doc, list) else None)
    if not recs:
        raise ConfigError(f"{path} holds no system_noise records")
    return [SystemNoise(**{k: r[k] for k in ("g_sys", "t_sys", "eta_meas", "frequency")}) for r in recs]


def cmd_cross_cal(run: Run, args):
    p = run.cfg.paths
    sntj = _system_noise_records(_require(p.sntj_report, "paths.sntj_report"))
    wqed = _system_noise_records(_require(p.wqed_report, "paths.wqed_report"))
    out = cross_calibrate_sntj(sntj, wqed)
    return run.write_json(
        {"corrected": [{"delta_a_db": da, **s.as_dict(), "t_sys_uncorrected": o.t_sys} for (s, da), o in zip(out, sntj)]}
    )


def cmd_generate(run: Run, args):
    """Seeded synthetic inputs for the measurement-side subcommands."""
    from . import synthetic

    seed = args.seed
    kind = args.kind
    if kind == "quadrature":
        ds = synthetic.single_mode_dataset(3.64065, 13.1258, 3.87448, n=4000, seed=seed, exact=False, metadata={"frequency_hz": 6.7e9})
        path = run.out / "quadrature.csv"
        ds.to_csv(path)
    elif kind == "sntj":
        v = np.linspace(-300e-6, 300e-6, 121)
        n = synthetic.sntj_curve(v, 0.030, 2.5, 1e6, 100.0, 6.7e9, rel_noise=0.01, seed=seed)
        path = run.out / "sntj.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["v_bias_uv", "noise_dbm"])
            for a, b in zip(v * 1e6, watts_to_dbm(n)):
                w.writerow([repr(float(a)), repr(float(b))])
    else:
        omegas = np.array([3e4, 1e5, 3e5, 1e6, 3e6, 1e7])
        d, k, t = synthetic.wqed_scan(np.linspace(-5e6, 5e6, 101), omegas, 1e6, 0.6e6, noise=0.01, seed=seed)
        # input powers behind a 60 dB line attenuation
        p_dbm = np.round(watts_to_dbm(power_at_qubit(omegas, 1e6, 6.7e9)) + 60.0, 6)[k]
        path = run.out / "wqed.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["detuning_mhz", "power_dbm", "s21_real", "s21_imag"])
            for row in zip(d / 1e6, p_dbm, t.real, t.imag):
                w.writerow([repr(float(x)) for x in row])
    return run.write_json({"kind": kind, "seed": seed, "file": path.name}, suffix=f".{kind}")


COMMANDS = {
    "dispersion": cmd_dispersion,
    "phasematch": cmd_phasematch,
    "gain": cmd_gain,
    "pser": cmd_pser,
    "squeeze": cmd_squeeze,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "calibrate-sntj": cmd_calibrate_sntj,
    "calibrate-wqed": cmd_calibrate_wqed,
    "cross-cal": cmd_cross_cal,
    "generate": cmd_generate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="workbench JSON config")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic generators")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a scalar config value")
    parser = argparse.ArgumentParser(prog="jtwpa", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "generate":
            p.add_argument("kind", choices=("quadrature", "sntj", "wqed"))
    return parser


def _error_json(exc):
    code = getattr(exc, "code", "error")
    return json.dumps({"error": type(exc).__name__, "code": code, "message": str(exc)})


def main(argv=None):
    level = os.environ.get("WORKBENCH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.set)
        run = Run(args.command, cfg, args.out, args.format)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            path = COMMANDS[args.command](run, args)
        log.info("wrote %s", path)
        print(str(path))
        return 0
    except ConfigError as exc:
        print(_error_json(exc), file=sys.stderr)
        return 2
    except (JTWPAError, ValueError, OSError) as exc:
        print(_error_json(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
