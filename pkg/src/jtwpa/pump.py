"""Classical pump amplitudes along the line and their calibration from power."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import FitDivergence, OverdriveError
from .phasematch import BETA_MAX


@dataclass(frozen=True)
class PumpState:
    """One pump tone.

    Parameters
    ----------
    freq : float
        Pump frequency in Hz.
    beta0 : complex
        Dimensionless amplitude I_p / 4 I_c at the input.
    k : float
        Bare wavevector at ``freq`` (rad/cell).
    gamma : float
        Power loss rate per cell, >= 0.
    c_p : float
        Power-to-|β|² calibration constant (1/W).
    """

    freq: float
    beta0: complex = 0.0
    k: float = 0.0
    gamma: float = 0.0
    c_p: float = 0.0

    def __post_init__(self):
        if abs(self.beta0) >= BETA_MAX:
            raise OverdriveError(f"|beta0| = {abs(self.beta0):.4f} >= {BETA_MAX}")
        if self.gamma < 0:
            raise ValueError("pump loss rate must be >= 0")

    def with_beta(self, beta0) -> PumpState:
        return replace(self, beta0=complex(beta0))


def decay_integral(gamma, x):
    """``∫_0^x exp(-gamma s) ds``, equal to ``x`` when gamma is 0."""
    gamma = np.asarray(gamma, dtype=float)
    x = np.asarray(x, dtype=float)
    safe = np.where(gamma > 0, gamma, 1.0)
    out = np.where(gamma * x > 1e-12, -np.expm1(-gamma * x) / safe, x * (1 - gamma * x / 2))
    return out[()]


def power_integrals(pumps, x):
    """``∫_0^x |β_p(s)|² ds`` for both pumps."""
    return np.array([abs(p.beta0) ** 2 * decay_integral(p.gamma, x) for p in pumps])


def propagate(pumps, x):
    """Pump amplitudes (β1(x), β2(x)) from the closed-form lossy solution.

    ``β_p(x) = β_p(0) exp(-γ_p x/2 + i k_p [I_p(x) + 2 I_q(x)])`` where
    ``I_p`` is the integrated pump power, so ``|β_p(x)|² = |β_p(0)|² e^{-γ_p x}``.
    """
    p1, p2 = pumps
    i1, i2 = power_integrals(pumps, x)
    b1 = p1.beta0 * np.exp(-p1.gamma * x / 2 + 1j * p1.k * (i1 + 2 * i2))
    b2 = p2.beta0 * np.exp(-p2.gamma * x / 2 + 1j * p2.k * (i2 + 2 * i1))
    return b1, b2


def pump_rhs(x, y, pumps):
    """Right-hand side of the pump equation of motion, for numerical checks."""
    b1, b2 = y
    p1, p2 = pumps
    return np.array(
        [
            1j * p1.k * (abs(b1) ** 2 + 2 * abs(b2) ** 2) * b1 - p1.gamma / 2 * b1,
            1j * p2.k * (abs(b2) ** 2 + 2 * abs(b1) ** 2) * b2 - p2.gamma / 2 * b2,
        ]
    )


def _efficiency(gamma_p, k_p, z):
    """``γ / (k (1 - e^{-γ z}))``, i.e. ``1 / (k z)`` for a lossless pump."""
    return 1.0 / (k_p * decay_integral(gamma_p, z))


def calibrate_beta_from_power(power, gamma_p, k_p, z, c_p):
    """|β(0)|² from pump power at the device input (W) via the c_p model."""
    power = np.asarray(power, dtype=float)
    if np.any(power < 0) or c_p <= 0:
        raise ValueError("power must be >= 0 and c_p > 0")
    beta_sq = _efficiency(gamma_p, k_p, z) * c_p * power
    if np.any(beta_sq >= BETA_MAX**2):
        raise OverdriveError(f"|beta|^2 = {np.max(beta_sq):.4g} >= {BETA_MAX ** 2}")
    return beta_sq[()]


def beta_from_phase_shift(delta_phi, gamma_p, k_p, z):
    """|β(0)|² from the single-pump self-phase shift ``delta_phi`` (rad)."""
    if np.any(np.asarray(delta_phi) < 0):
        raise ValueError("phase shift must be >= 0")
    return (_efficiency(gamma_p, k_p, z) * np.asarray(delta_phi, dtype=float))[()]


def fit_cp(powers, gains_db, gain_model, c_p0, max_nfev=200):
    """Least-squares c_p such that ``gain_model(c_p, P)`` matches ``gains_db``.

    Parameters
    ----------
    powers : array_like
        Pump powers (W), at least 3.
    gains_db : array_like
        Target gains in dB at those powers.
    gain_model : callable
        ``gain_model(c_p, power) -> gain_db`` for a scalar power.
    c_p0 : float
        Starting value (1/W).

    Returns
    -------
    c_p : float
    result : scipy.optimize.OptimizeResult
    """
    powers = np.asarray(powers, dtype=float)
    gains_db = np.asarray(gains_db, dtype=float)
    if powers.size < 3 or powers.shape != gains_db.shape:
        raise ValueError("need at least 3 (power, gain) points of matching shape")

    def resid(theta):
        c_p = c_p0 * np.exp(theta[0])
        return np.array([gain_model(c_p, p) for p in powers]) - gains_db

    r0 = resid(np.zeros(1))
    if not np.all(np.isfinite(r0)):
        raise FitDivergence("gain model is not finite at the starting c_p")
    res = least_squares(resid, np.zeros(1), method="trf", x_scale=0.1, diff_step=1e-6, max_nfev=max_nfev, xtol=1e-12, ftol=1e-12)
    if not np.all(np.isfinite(res.fun)) or (res.cost > 0.5 * r0 @ r0 and res.cost > 1e-20):
        raise FitDivergence(f"c_p fit did not reduce the residual (cost {res.cost:.3g})")
    return float(c_p0 * np.exp(res.x[0])), res


class PumpPowerCalibrator(RegressorMixin, BaseEstimator):
    """Fit the pump calibration constant c_p to a gain-versus-power curve.

    ``gain_model(c_p, power) -> gain_db`` is the forward model; once fitted,
    :meth:`predict` evaluates it at new powers with the fitted c_p so the
    same constant can be reused for squeezing predictions.
    """

    def __init__(self, gain_model=None, c_p0=1e9, max_nfev=200):
        self.gain_model = gain_model
        self.c_p0 = c_p0
        self.max_nfev = max_nfev

    def fit(self, X, y):
        X = np.asarray(X, dtype=float).reshape(-1)
        self.c_p_, self.fit_result_ = fit_cp(X, y, self.gain_model, self.c_p0, self.max_nfev)
        return self

    def predict(self, X):
        check_is_fitted(self, "c_p_")
        return np.array([self.gain_model(self.c_p_, p) for p in np.asarray(X, dtype=float).reshape(-1)])
