"""From digitizer I/Q samples to calibrated squeezing at the device output.

The chain is modeled as a beamsplitter of transmission ``η`` followed by a
linear voltage scale: ``α ΔV² = η ΔX² + (1 - η)/2`` with vacuum variance 1/2.
``α`` is fixed from the pump-off data, whose device-output variance is
``1/2 + n̄``.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DegenerateData, LengthMismatch, NonPhysicalVariance
from .units import HBAR, K_B
from .validation import check_iq_samples

MIN_SAMPLES = 1000
PUMP_STATES = ("off", "on")
CHANNELS = ("single", "signal", "idler")
DEFAULT_N_BAR = 1.4e-4


# ---------------------------------------------------------------- data


@dataclass(frozen=True)
class QuadratureDataset:
    """I/Q samples tagged with pump state and channel.

    ``metadata`` may hold ``frequency_hz`` and ``bandwidth_hz``.
    """

    i_mv: np.ndarray
    q_mv: np.ndarray
    pump_state: np.ndarray
    channel: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        i = np.asarray(self.i_mv, dtype=float)
        q = np.asarray(self.q_mv, dtype=float)
        ps = np.asarray(self.pump_state).astype(str)
        ch = np.asarray(self.channel).astype(str)
        if not (i.shape == q.shape == ps.shape == ch.shape) or i.ndim != 1:
            raise LengthMismatch("columns must be one-dimensional and of equal length")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(q))):
            raise ValueError("samples must be finite")
        if not set(ps) <= set(PUMP_STATES):
            raise ValueError(f"pump_state must be one of {PUMP_STATES}")
        if not set(ch) <= set(CHANNELS):
            raise ValueError(f"channel must be one of {CHANNELS}")
        for name, val in (("i_mv", i), ("q_mv", q), ("pump_state", ps), ("channel", ch)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    def __len__(self):
        return self.i_mv.size

    def cell(self, pump_state, channel="single"):
        """``(n, 2)`` array of (I, Q) for one pump state and channel, in file order."""
        m = (self.pump_state == pump_state) & (self.channel == channel)
        return np.column_stack([self.i_mv[m], self.q_mv[m]])

    def scaled(self, s):
        return QuadratureDataset(self.i_mv * s, self.q_mv * s, self.pump_state, self.channel, dict(self.metadata))

    # I/O -------------------------------------------------------------

    @classmethod
    def from_csv(cls, path, metadata=None):
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            need = ["i_mv", "q_mv", "pump_state", "channel"]
            if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
                raise ValueError(f"CSV header must contain {','.join(need)}")
            rows = list(reader)
        meta = dict(metadata or {})
        side = Path(path).with_suffix(".json")
        if not meta and side.exists():
            meta = json.loads(side.read_text()).get("metadata", {})
        return cls(
            np.array([float(r["i_mv"]) for r in rows]),
            np.array([float(r["q_mv"]) for r in rows]),
            np.array([r["pump_state"].strip() for r in rows]),
            np.array([r["channel"].strip() for r in rows]),
            meta,
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i_mv", "q_mv", "pump_state", "channel"])
            for row in zip(self.i_mv, self.q_mv, self.pump_state, self.channel):
                w.writerow([repr(float(row[0])), repr(float(row[1])), row[2], row[3]])
        if self.metadata:
            Path(path).with_suffix(".json").write_text(json.dumps({"metadata": self.metadata}, indent=2))

    @classmethod
    def from_binary(cls, path, sidecar=None):
        """Little-endian float64 records ``(i_mv, q_mv, pump_state, channel)``.

        The two label columns hold integer codes whose meaning is listed in
        the JSON sidecar (``pump_state_codes``, ``channel_codes``).
        """
        sidecar = Path(sidecar) if sidecar else Path(path).with_suffix(".json")
        side = json.loads(sidecar.read_text())
        raw = np.fromfile(path, dtype="<f8")
        if raw.size % 4:
            raise LengthMismatch("binary record length is not a multiple of 4 values")
        raw = raw.reshape(-1, 4)
        ps_codes = side.get("pump_state_codes", list(PUMP_STATES))
        ch_codes = side.get("channel_codes", list(CHANNELS))
        ps = np.array(ps_codes)[raw[:, 2].astype(int)]
        ch = np.array(ch_codes)[raw[:, 3].astype(int)]
        return cls(raw[:, 0], raw[:, 1], ps, ch, side.get("metadata", {}))

    def to_binary(self, path, sidecar=None):
        codes_ps = np.array([PUMP_STATES.index(s) for s in self.pump_state], dtype=float)
        codes_ch = np.array([CHANNELS.index(c) for c in self.channel], dtype=float)
        np.column_stack([self.i_mv, self.q_mv, codes_ps, codes_ch]).astype("<f8").tofile(path)
        sidecar = Path(sidecar) if sidecar else Path(path).with_suffix(".json")
        sidecar.write_text(
            json.dumps(
                {
                    "columns": ["i_mv", "q_mv", "pump_state", "channel"],
                    "pump_state_codes": list(PUMP_STATES),
                    "channel_codes": list(CHANNELS),
                    "metadata": self.metadata,
                },
                indent=2,
            )
        )


# ---------------------------------------------------------------- variances


@dataclass(frozen=True)
class VarianceEstimate:
    var_min: float
    var_max: float
    angle: float
    n: int
    stderr: float
    stderr_max: float

    @property
    def var_mean(self):
        return 0.5 * (self.var_min + self.var_max)

    @property
    def sigma_min(self):
        return float(np.sqrt(self.var_min))

    @property
    def sigma_max(self):
        return float(np.sqrt(self.var_max))


def estimate_variances(samples) -> VarianceEstimate:
    """Principal-axis variances of ``(n, 2)`` I/Q samples.

    ``angle`` is the direction of the major axis,
    ``½ atan2(2 cov_IQ, var_I - var_Q)``. Standard errors follow the
    Gaussian result ``σ² √(2/(n - 1))``.
    """
    x = check_iq_samples(samples, MIN_SAMPLES)
    n = x.shape[0]
    cov = np.cov(x, rowvar=False)
    w = np.linalg.eigvalsh(cov)
    if w[0] <= np.finfo(float).eps * max(w[1], np.finfo(float).tiny) * 10:
        raise DegenerateData("sample covariance is singular")
    angle = 0.5 * np.arctan2(2 * cov[0, 1], cov[0, 0] - cov[1, 1])
    k = np.sqrt(2.0 / (n - 1))
    return VarianceEstimate(float(w[0]), float(w[1]), float(angle), n, float(w[0] * k), float(w[1] * k))


# ---------------------------------------------------------------- chain


@dataclass(frozen=True)
class ChainModel:
    """Voltage-to-photon conversion of the output chain."""

    eta_meas: float
    n_bar: float
    alpha: float
    var_off: float
    t_sys: float | None = None

    @property
    def dx2_off(self):
        """Pump-off variance after the beamsplitter, ``1/2 + η n̄``."""
        return 0.5 + self.eta_meas * self.n_bar

    @property
    def dX2_off(self):
        """Pump-off variance at the device output, ``1/2 + n̄``."""
        return 0.5 + self.n_bar


def build_chain(var_off, eta_meas, n_bar=DEFAULT_N_BAR, t_sys=None, f=None) -> ChainModel:
    """Fix ``α = (1/2 + η n̄) / ΔV²_off``.

    When both ``t_sys`` and ``f`` are given, ``eta_meas`` must equal
    ``ħω / (2 k_B T_sys)`` to 1e-6 relative.
    """
    if var_off <= 0:
        raise ValueError("var_off must be positive")
    if not 0 < eta_meas <= 1:
        raise ValueError("eta_meas must be in (0, 1]")
    if n_bar < 0:
        raise ValueError("n_bar must be >= 0")
    if t_sys is not None and f is not None:
        eta_t = HBAR * 2 * np.pi * f / (2 * K_B * t_sys)
        if abs(eta_t - eta_meas) > 1e-6 * eta_meas:
            raise ValueError(f"eta_meas {eta_meas} inconsistent with T_sys (gives {eta_t})")
    alpha = (0.5 + eta_meas * n_bar) / var_off
    return ChainModel(float(eta_meas), float(n_bar), float(alpha), float(var_off), t_sys)


def to_photon_basis(var, chain: ChainModel, stderr=None):
    """Device-output variance ``(α ΔV² - (1 - η)/2) / η`` in quanta.

    A negative result within three propagated standard errors of zero is
    clamped to 0 with a warning; beyond that :class:`NonPhysicalVariance`
    is raised.
    """
    eta = chain.eta_meas
    out = (chain.alpha * np.asarray(var, dtype=float) - (1 - eta) / 2) / eta
    if np.any(out < 0):
        tol = 0.0 if stderr is None else 3 * chain.alpha * np.asarray(stderr) / eta
        if np.any(out < -tol):
            raise NonPhysicalVariance(f"variance {np.min(out):.4g} quanta below zero: chain miscalibrated")
        warnings.warn("negative variance within statistical tolerance clamped to 0", RuntimeWarning, stacklevel=2)
        out = np.maximum(out, 0.0)
    return out[()]


def from_photon_basis(dX2, chain: ChainModel):
    """Forward beamsplitter map back to digitizer variance (mV²)."""
    eta = chain.eta_meas
    return ((eta * np.asarray(dX2, dtype=float) + (1 - eta) / 2) / chain.alpha)[()]


def squeezing_db(dX2, dX2_off):
    dX2, dX2_off = np.asarray(dX2, dtype=float), np.asarray(dX2_off, dtype=float)
    if np.any(dX2 <= 0) or np.any(dX2_off <= 0):
        raise ValueError("variances must be positive")
    return (10 * np.log10(dX2 / dX2_off))[()]


def purity(s_minus, s_plus):
    """``1/√(S₋ S₊)`` from variance ratios to vacuum."""
    if s_minus <= 0 or s_plus <= 0:
        raise ValueError("variance ratios must be positive")
    return float(1 / np.sqrt(s_minus * s_plus))


def variance_change(var_sqz, var_off):
    if var_off <= 0:
        raise ValueError("var_off must be positive")
    return float(1 - var_sqz / var_off)


def eta_from_tsys(t_sys, f):
    return float(HBAR * 2 * np.pi * f / (2 * K_B * t_sys))


def single_mode_report(var_min, var_max, var_off, eta_meas, n_bar=DEFAULT_N_BAR, stderr=None):
    """All stage values of the single-mode pipeline as a dict."""
    chain = build_chain(var_off, eta_meas, n_bar)
    se_min, se_max = (None, None) if stderr is None else stderr
    X_min = float(to_photon_basis(var_min, chain, se_min))
    X_max = float(to_photon_basis(var_max, chain, se_max))
    off = chain.dX2_off
    db_min = float(squeezing_db(X_min, off)) if X_min > 0 else float("-inf")
    db_max = float(squeezing_db(X_max, off))
    pur = purity(X_min / off, X_max / off) if X_min > 0 else float("nan")
    return {
        "dV2_min_mv2": float(var_min),
        "dV2_max_mv2": float(var_max),
        "dV2_off_mv2": float(var_off),
        "eta_meas": chain.eta_meas,
        "n_bar": chain.n_bar,
        "alpha_quanta_per_mv2": chain.alpha,
        "dx2_min": float(chain.alpha * var_min),
        "dx2_max": float(chain.alpha * var_max),
        "dx2_off": chain.dx2_off,
        "dX2_min": X_min,
        "dX2_max": X_max,
        "dX2_off": off,
        "squeeze_db": db_min,
        "antisqueeze_db": db_max,
        "purity": pur,
    }


def eta_bounds_report(var_min, var_max, var_off, eta, eta_lo, eta_hi, n_bar=DEFAULT_N_BAR):
    """dB values at ``eta`` and at the two ends of its uncertainty interval."""
    out = {}
    for key, e in (("nominal", eta), ("eta_low", eta_lo), ("eta_high", eta_hi)):
        r = single_mode_report(var_min, var_max, var_off, e, n_bar)
        out[key] = {"eta_meas": e, "squeeze_db": r["squeeze_db"], "antisqueeze_db": r["antisqueeze_db"], "purity": r["purity"]}
    return out


# ---------------------------------------------------------------- two-mode


def nu_tms(var_signal_off, var_idler_off):
    """Idler rescaling ``√(ΔV²_s,off / ΔV²_i,off)``."""
    if var_signal_off <= 0 or var_idler_off <= 0:
        raise ValueError("variances must be positive")
    return float(np.sqrt(var_signal_off / var_idler_off))


def _rotate(iq, phi, nu):
    c, s = np.cos(phi), np.sin(phi)
    return nu * np.column_stack([iq[:, 0] * c - iq[:, 1] * s, iq[:, 0] * s + iq[:, 1] * c])


def collective_quadratures(signal, idler, phi_m=0.0, nu=1.0):
    """``(X₊, X₋, P₊, P₋)`` after scaling the idler by ``nu`` and rotating it by ``phi_m``."""
    signal = np.asarray(signal, dtype=float)
    idler = np.asarray(idler, dtype=float)
    if signal.shape != idler.shape or signal.ndim != 2 or signal.shape[1] != 2:
        raise LengthMismatch("signal and idler must be paired (n, 2) arrays")
    it = _rotate(idler, phi_m, nu)
    return (
        signal[:, 0] + it[:, 0],
        signal[:, 0] - it[:, 0],
        signal[:, 1] + it[:, 1],
        signal[:, 1] - it[:, 1],
    )


def phase_sweep(signal, idler, nu=1.0, grid=None, refine=True):
    """Idler rotation minimizing ``Var(X₊)``.

    Returns
    -------
    phi_opt : float
        In ``[0, 2π)``; refined by a parabola through the best grid point
        and its neighbours.
    table : ndarray, shape (m, 2)
        ``(φ, Var(X₊))`` on the grid.
    """
    signal = np.asarray(signal, dtype=float)
    idler = np.asarray(idler, dtype=float)
    if grid is None:
        grid = np.deg2rad(np.arange(360.0))
    grid = np.asarray(grid, dtype=float)
    # Var(X_s + ν(X_i cos φ - P_i sin φ)) is a trigonometric quadratic in φ
    cov = np.cov(np.column_stack([signal[:, 0], idler]), rowvar=False)
    vs, vi, vp = cov[0, 0], cov[1, 1], cov[2, 2]
    csx, csp, cxp = cov[0, 1], cov[0, 2], cov[1, 2]
    c, s = np.cos(grid), np.sin(grid)
    var = vs + nu**2 * (c**2 * vi + s**2 * vp - 2 * c * s * cxp) + 2 * nu * (c * csx - s * csp)
    table = np.column_stack([grid, var])
    k = int(np.argmin(var))
    phi = grid[k]
    if refine and grid.size >= 3:
        y0, y1, y2 = var[(k - 1) % grid.size], var[k], var[(k + 1) % grid.size]
        h = grid[1] - grid[0]
        den = y0 - 2 * y1 + y2
        if den > 0:
            phi = phi + 0.5 * h * (y0 - y2) / den
    return float(np.mod(phi, 2 * np.pi)), table


def two_mode_report(dataset: QuadratureDataset, eta_meas, n_bar=DEFAULT_N_BAR, grid=None):
    """Collective-quadrature squeezing from signal/idler data with pump on and off."""
    s_off, i_off = dataset.cell("off", "signal"), dataset.cell("off", "idler")
    s_on, i_on = dataset.cell("on", "signal"), dataset.cell("on", "idler")
    v_s = estimate_variances(s_off).var_mean
    v_i = estimate_variances(i_off).var_mean
    nu = nu_tms(v_s, v_i)
    phi, _ = phase_sweep(s_on, i_on, nu, grid)
    xp_off, _, pp_off, _ = collective_quadratures(s_off, i_off, phi, nu)
    xp_on, xm_on, pp_on, pm_on = collective_quadratures(s_on, i_on, phi, nu)
    off = estimate_variances(np.column_stack([xp_off, pp_off]) / np.sqrt(2))
    # squeezed and anti-squeezed collective quadratures, normalized as one mode
    sq = np.var(xp_on, ddof=1) / 2
    anti = max(np.var(xm_on, ddof=1), np.var(pp_on, ddof=1), np.var(pm_on, ddof=1)) / 2
    rep = single_mode_report(sq, anti, off.var_mean, eta_meas, n_bar)
    rep.update({"nu_tms": nu, "phi_opt_rad": phi, "variance_change": variance_change(sq, off.var_mean)})
    return rep


class QuadratureAnalyzer(TransformerMixin, BaseEstimator):
    """Single-mode pipeline as an estimator.

    ``fit`` takes pump-off I/Q samples and fixes the chain; ``transform``
    maps pump-on I/Q samples to ``[ΔX²_min, ΔX²_max]`` in quanta at the
    device output; ``report`` adds the dB values and purity.
    """

    def __init__(self, eta_meas=0.06534, n_bar=DEFAULT_N_BAR):
        self.eta_meas = eta_meas
        self.n_bar = n_bar

    def fit(self, X, y=None):
        est = estimate_variances(X)
        self.off_estimate_ = est
        self.chain_ = build_chain(est.var_mean, self.eta_meas, self.n_bar)
        return self

    def transform(self, X):
        check_is_fitted(self, "chain_")
        est = estimate_variances(X)
        self.on_estimate_ = est
        return np.array(
            [
                to_photon_basis(est.var_min, self.chain_, est.stderr),
                to_photon_basis(est.var_max, self.chain_, est.stderr_max),
            ]
        )

    def report(self, X):
        check_is_fitted(self, "chain_")
        est = estimate_variances(X)
        off = self.off_estimate_
        rep = single_mode_report(est.var_min, est.var_max, off.var_mean, self.eta_meas, self.n_bar, (est.stderr, est.stderr_max))
        rep.update(
            {
                "sigma_min_off_mv": off.sigma_min,
                "sigma_max_off_mv": off.sigma_max,
                "sigma_min_sqz_mv": est.sigma_min,
                "sigma_max_sqz_mv": est.sigma_max,
                "angle_rad": est.angle,
                "n_samples_on": est.n,
                "n_samples_off": off.n,
            }
        )
        return rep

