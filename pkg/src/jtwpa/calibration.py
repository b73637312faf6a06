"""System-noise calibration with a shot-noise junction and a waveguide-coupled qubit."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import (
    FitDivergence,
    FrequencyMismatch,
    IdentifiabilityError,
    QuantumBoundViolation,
    UnwrapError,
)
from .units import E_CHARGE, H_PLANCK, HBAR, K_B, dbm_to_watts, linear_to_db
from .validation import check_frequency_grid

# ---------------------------------------------------------------- SNTJ


def _x_coth(x, temp):
    """``x coth(x / T)`` with the ``x -> 0`` limit ``T``."""
    x = np.asarray(x, dtype=float)
    u = x / temp
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    return np.where(small, temp * (1 + u**2 / 3), x / np.tanh(safe))


def _d_x_coth_dT(x, temp):
    """Derivative of ``x coth(x/T)`` with respect to ``T``: ``(x/T)² csch²(x/T)``."""
    u = np.asarray(x, dtype=float) / temp
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    a = np.abs(safe)
    # (u / sinh u)² written with e^{-2|u|} so large |u| underflows to 0
    return np.where(small, 1 - u**2 / 3, (2 * a * np.exp(-a) / -np.expm1(-2 * a)) ** 2)


def sntj_model(v, temp, t_noise, gain, bandwidth, f):
    """Noise power (W) of a biased tunnel junction seen through the chain.

    ``G k_B B {T_N + ½[x₊ coth(x₊/T) + x₋ coth(x₋/T)]}`` with
    ``x± = (eV ± hf)/2k_B``.
    """
    if temp <= 0 or bandwidth <= 0:
        raise ValueError("temperature and bandwidth must be positive")
    v = np.asarray(v, dtype=float)
    xp = (E_CHARGE * v + H_PLANCK * f) / (2 * K_B)
    xm = (E_CHARGE * v - H_PLANCK * f) / (2 * K_B)
    return gain * K_B * bandwidth * (t_noise + 0.5 * (_x_coth(xp, temp) + _x_coth(xm, temp)))


@dataclass(frozen=True)
class SntjFit:
    t_junction: float
    t_noise: float
    gain: float
    bandwidth: float
    freq: float
    stderr: dict = field(default_factory=dict)
    residual_rms: float = 0.0

    @property
    def gain_bandwidth(self):
        """``G k_B B`` in W/K."""
        return self.gain * K_B * self.bandwidth

    def as_dict(self):
        d = asdict(self)
        d["gain_db"] = float(linear_to_db(self.gain))
        return d


def sntj_fit(v, noise_w, f, bandwidth, x0=None, max_nfev=2000) -> SntjFit:
    """Least-squares ``(T, T_N, G)`` from a bias sweep.

    Parameters
    ----------
    v : array_like
        Bias voltages in V.
    noise_w : array_like
        Measured noise powers in W.
    f, bandwidth : float
        Measurement frequency and bandwidth in Hz.
    x0 : tuple, optional
        Starting ``(T, T_N, G)``; otherwise taken from the plateau height and
        the asymptotic slope.

    Raises
    ------
    IdentifiabilityError
        Fewer than 20 points, or no points on the plateau (``e|V| < hf``) or
        on the shot-noise asymptotes (``e|V| > 4hf``).
    FitDivergence
    """
    v = np.asarray(v, dtype=float)
    n = np.asarray(noise_w, dtype=float)
    if v.shape != n.shape or v.size < 20:
        raise IdentifiabilityError("need at least 20 (V, N) points")
    ev = E_CHARGE * np.abs(v)
    hf = H_PLANCK * f
    if not np.any(ev < hf):
        raise IdentifiabilityError("no points on the zero-bias plateau")
    if np.sum(ev > 4 * hf) < 2:
        raise IdentifiabilityError("no points on the shot-noise asymptotes")
    if x0 is None:
        big = ev > 4 * hf
        slope = np.polyfit(np.abs(v[big]), n[big], 1)[0]
        g0 = max(2 * slope / (E_CHARGE * bandwidth), 1e-30)
        t0 = 0.05
        plateau = np.min(n)
        tn0 = plateau / (g0 * K_B * bandwidth) - 0.5 * hf / (2 * K_B) * 2 / np.tanh(hf / (2 * K_B * t0))
        x0 = (t0, max(tn0, 0.01), g0)
    scale = np.array(x0, dtype=float)
    xp = (E_CHARGE * v + hf) / (2 * K_B)
    xm = (E_CHARGE * v - hf) / (2 * K_B)

    # T enters as log(T / T0): it is weakly constrained when k_B T << hf
    def unpack(th):
        return scale[0] * np.exp(th[0]), th[1] * scale[1], th[2] * scale[2]

    def resid(th):
        t, tn, g = unpack(th)
        return sntj_model(v, t, tn, g, bandwidth, f) / n - 1

    def jac(th):
        t, tn, g = unpack(th)
        gkb = g * K_B * bandwidth
        model = sntj_model(v, t, tn, g, bandwidth, f)
        d_t = gkb * 0.5 * (_d_x_coth_dT(xp, t) + _d_x_coth_dT(xm, t))
        d_tn = np.full_like(v, gkb)
        d_g = model / g
        return np.column_stack([d_t * t, d_tn * scale[1], d_g * scale[2]]) / n[:, None]

    th0 = np.array([0.0, 1.0, 1.0])
    r0 = resid(th0)
    res = least_squares(resid, th0, jac=jac, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev)
    if not res.success or not np.all(np.isfinite(res.x)) or res.cost > 0.5 * (r0 @ r0) + 1e-30:
        raise FitDivergence(f"SNTJ fit did not converge: {res.message}")
    t, tn, g = unpack(res.x)
    if g <= 0:
        raise FitDivergence("SNTJ fit returned non-physical parameters")
    dof = max(v.size - 3, 1)
    s2 = 2 * res.cost / dof
    jtj = res.jac.T @ res.jac
    # T drops out when k_B T << hf everywhere; keep the T_N and G errors
    singular = np.linalg.matrix_rank(jtj) < 3
    cov = (np.linalg.pinv(jtj) if singular else np.linalg.inv(jtj)) * s2
    se = np.sqrt(np.abs(np.diag(cov))) * np.array([t, scale[1], scale[2]])
    if singular:
        se[0] = np.inf
    stderr = {"t_junction": float(se[0]), "t_noise": float(se[1]), "gain": float(se[2])}
    bound = HBAR * 2 * np.pi * f / (2 * K_B)
    if tn < bound - 3 * stderr.get("t_noise", 0.0):
        raise QuantumBoundViolation(f"T_N = {tn:.4g} K is below the quantum limit {bound:.4g} K")
    return SntjFit(float(t), float(tn), float(g), float(bandwidth), float(f), stderr, float(np.sqrt(2 * res.cost / v.size)))


class SNTJCalibrator(RegressorMixin, BaseEstimator):
    """Estimator wrapper: ``fit(V, N)`` then ``predict(V)`` gives noise power."""

    def __init__(self, freq=6.7e9, bandwidth=100.0):
        self.freq = freq
        self.bandwidth = bandwidth

    def fit(self, X, y):
        v = np.asarray(X, dtype=float).reshape(-1)
        self.fit_ = sntj_fit(v, y, self.freq, self.bandwidth)
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        r = self.fit_
        return sntj_model(np.asarray(X, dtype=float).reshape(-1), r.t_junction, r.t_noise, r.gain, r.bandwidth, r.freq)


# ---------------------------------------------------------------- wQED


@dataclass(frozen=True)
class WqedFit:
    gamma1: float
    gamma2: float
    omega_drive: tuple
    xi: float = 1.0
    stderr: dict = field(default_factory=dict)
    residual_rms: float = 0.0

    @property
    def gamma_phi(self):
        return self.gamma2 - self.gamma1 / 2

    def as_dict(self):
        d = asdict(self)
        d["omega_drive"] = list(self.omega_drive)
        return d


def wqed_transmission(delta, omega_drive, gamma1, gamma2, xi=1.0):
    """Transmission past a waveguide-coupled qubit (all rates in the same units)."""
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("decay rates must be positive")
    delta = np.asarray(delta, dtype=float)
    om = np.asarray(omega_drive, dtype=float)
    den = 1 + (delta / gamma2) ** 2 + om**2 / (gamma1 * gamma2)
    return 1 - xi * gamma1 / (2 * gamma2) * (1 - 1j * delta / gamma2) / den


def _wqed_jac_complex(delta, om, g1, g2, xi):
    """Complex partial derivatives of ``t`` w.r.t. (Γ₁, Γ₂, Ω)."""
    A = xi * g1 / (2 * g2)
    N = 1 - 1j * delta / g2
    D = 1 + (delta / g2) ** 2 + om**2 / (g1 * g2)
    dD_g1 = -(om**2) / (g1**2 * g2)
    dD_g2 = -2 * delta**2 / g2**3 - om**2 / (g1 * g2**2)
    dt_g1 = -((xi / (2 * g2)) * N / D - A * N * dD_g1 / D**2)
    dt_g2 = -((-A / g2) * N / D + A * (1j * delta / g2**2) / D - A * N * dD_g2 / D**2)
    dt_om = A * N / D**2 * (2 * om / (g1 * g2))
    return dt_g1, dt_g2, dt_om


def wqed_fit_2d(delta, power_index, s21, x0=None, xi=1.0, max_nfev=5000) -> WqedFit:
    """Joint fit of a background-normalized transmission scan.

    Parameters
    ----------
    delta : array_like
        Detuning of every point (same units as the returned rates).
    power_index : array_like of int
        Row label ``0..K-1`` of every point; each row has its own Ω.
    s21 : array_like of complex
        Normalized transmission.
    """
    delta = np.asarray(delta, dtype=float)
    idx = np.asarray(power_index, dtype=int)
    s21 = np.asarray(s21, dtype=complex)
    if not (delta.shape == idx.shape == s21.shape):
        raise ValueError("delta, power_index and s21 must have equal shapes")
    K = int(idx.max()) + 1
    near = np.abs(delta) <= np.quantile(np.abs(delta), 0.1)
    dip = np.array([np.mean(np.real(1 - s21[(idx == k) & near])) if np.any((idx == k) & near) else 0.0 for k in range(K)])
    if dip.max() < 0.05:
        raise IdentifiabilityError("every power row is saturated; no resonant dip to fix Γ₁, Γ₂")
    if x0 is None:
        k0 = int(np.argmax(dip))
        row = idx == k0
        d_row, t_row = delta[row], s21[row]
        depth = np.abs(1 - t_row) ** 2
        half = d_row[depth >= depth.max() / 2]
        g2 = max((half.max() - half.min()) / 2, np.min(np.diff(np.unique(d_row))))
        amp = min(max(dip[k0], 1e-3), 1.0)
        g1 = 2 * g2 * amp
        om = np.sqrt(np.clip(g1 * g2 * (amp / np.maximum(dip, 1e-6) - 1), 0, None))
        om = np.where(om > 0, om, 0.1 * np.sqrt(g1 * g2))
        x0 = np.concatenate([[g1, g2], om])
    scale = np.abs(np.asarray(x0, dtype=float))
    scale[scale == 0] = 1.0

    def unpack(th):
        p = th * scale
        return p[0], p[1], p[2:]

    def resid(th):
        g1, g2, om = unpack(th)
        t = wqed_transmission(delta, om[idx], g1, g2, xi)
        r = t - s21
        return np.concatenate([r.real, r.imag])

    def jac(th):
        g1, g2, om = unpack(th)
        d1, d2, do = _wqed_jac_complex(delta, om[idx], g1, g2, xi)
        J = np.zeros((delta.size, 2 + K), dtype=complex)
        J[:, 0] = d1 * scale[0]
        J[:, 1] = d2 * scale[1]
        J[np.arange(delta.size), 2 + idx] = do * scale[2 + idx]
        return np.vstack([J.real, J.imag])

    th0 = np.ones(2 + K)
    r0 = resid(th0)
    res = least_squares(resid, th0, jac=jac, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev)
    if not res.success or not np.all(np.isfinite(res.x)) or res.cost > 0.5 * (r0 @ r0) + 1e-30:
        raise FitDivergence(f"wQED fit did not converge: {res.message}")
    g1, g2, om = unpack(res.x)
    g1, g2, om = abs(g1), abs(g2), np.abs(om)
    stderr = {}
    dof = max(2 * delta.size - K - 2, 1)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * (2 * res.cost / dof)
        se = np.sqrt(np.abs(np.diag(cov))) * scale
        stderr = {"gamma1": float(se[0]), "gamma2": float(se[1]), "omega_drive": se[2:].tolist()}
    except np.linalg.LinAlgError:
        pass
    return WqedFit(float(g1), float(g2), tuple(float(o) for o in om), xi, stderr, float(np.sqrt(2 * res.cost / (2 * delta.size))))


def power_at_qubit(omega_drive, gamma1, f_qubit, p_input=None):
    """Drive power ``π ħ ω_q Ω² / 2Γ₁`` at the qubit (W).

    With ``p_input`` (W, same shape) also returns the line attenuation
    ``P / p_input`` as a linear ratio.
    """
    if gamma1 <= 0:
        raise ValueError("gamma1 must be positive")
    p = np.pi * HBAR * 2 * np.pi * f_qubit * np.asarray(omega_drive, dtype=float) ** 2 / (2 * gamma1)
    if p_input is None:
        return p[()]
    return p[()], (p / np.asarray(p_input, dtype=float))[()]


def omega_from_power(power, gamma1, f_qubit):
    """Inverse of :func:`power_at_qubit`."""
    return np.sqrt(2 * gamma1 * np.asarray(power, dtype=float) / (np.pi * HBAR * 2 * np.pi * f_qubit))[()]


class WqedCalibrator(BaseEstimator):
    """Estimator wrapper around :func:`wqed_fit_2d`.

    ``fit(X, y)`` takes ``X = [[delta, power_row], ...]`` and complex ``y``;
    ``predict`` returns the modeled transmission.
    """

    def __init__(self, xi=1.0):
        self.xi = xi

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        self.fit_ = wqed_fit_2d(X[:, 0], X[:, 1].astype(int), y, xi=self.xi)
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = np.asarray(X, dtype=float)
        om = np.asarray(self.fit_.omega_drive)[X[:, 1].astype(int)]
        return wqed_transmission(X[:, 0], om, self.fit_.gamma1, self.fit_.gamma2, self.xi)


# ---------------------------------------------------------------- chain


@dataclass(frozen=True)
class SystemNoise:
    g_sys: float  # dB
    t_sys: float  # K
    eta_meas: float
    frequency: float  # Hz

    def as_dict(self):
        return asdict(self)


def _eta(t_sys, f):
    return HBAR * 2 * np.pi * f / (2 * K_B * t_sys)


def _make_system_noise(g_lin, p_noise_rt, bandwidth, f):
    t_sys = p_noise_rt / (g_lin * K_B * bandwidth)
    eta = _eta(t_sys, f)
    if eta > 1 + 1e-12:
        raise QuantumBoundViolation(f"η = {eta:.4g} > 1: T_sys below the quantum limit")
    return SystemNoise(float(linear_to_db(g_lin)), float(t_sys), float(eta), float(f))


def system_noise(p_rt_cal, p_mxc_cal, p_noise_rt, bandwidth, f) -> SystemNoise:
    """Chain gain, noise temperature and efficiency from a calibration tone.

    ``G = P_RT / P_MXC``, ``T_sys = P_noise / (G k_B B)``, ``η = ħω / 2k_B T_sys``.
    """
    if min(p_rt_cal, p_mxc_cal, p_noise_rt, bandwidth) <= 0:
        raise ValueError("powers and bandwidth must be positive")
    return _make_system_noise(p_rt_cal / p_mxc_cal, p_noise_rt, bandwidth, f)


def system_noise_from_db(g_sys_db, p_noise_dbm, bandwidth, f) -> SystemNoise:
    """:func:`system_noise` with the gain in dB and the noise in dBm."""
    return _make_system_noise(10 ** (g_sys_db / 10), float(dbm_to_watts(p_noise_dbm)), bandwidth, f)


def cross_calibrate_sntj(sntj, wqed, freq_tol=1e3):
    """Rescale SNTJ-path results by the gain difference to the wQED path.

    ``ΔA = G_wQED - G_SNTJ`` (dB) is attributed to extra insertion loss in
    the SNTJ path, so ``T_sys`` is multiplied by ``10^{-ΔA/10}``.

    Parameters
    ----------
    sntj, wqed : SystemNoise or sequence of SystemNoise
        Matched by frequency within ``freq_tol`` Hz.

    Returns
    -------
    list of (SystemNoise, ΔA dB)
    """
    sntj = [sntj] if isinstance(sntj, SystemNoise) else list(sntj)
    wqed = [wqed] if isinstance(wqed, SystemNoise) else list(wqed)
    out = []
    for s in sntj:
        match = [w for w in wqed if abs(w.frequency - s.frequency) <= freq_tol]
        if not match:
            raise FrequencyMismatch(f"no wQED result at {s.frequency / 1e9:.6f} GHz")
        w = match[0]
        da = w.g_sys - s.g_sys
        t = s.t_sys * 10 ** (-da / 10)
        eta = _eta(t, s.frequency)
        if eta > 1 + 1e-12:
            raise QuantumBoundViolation(f"corrected η = {eta:.4g} > 1")
        out.append((replace(s, g_sys=w.g_sys, t_sys=float(t), eta_meas=float(eta)), float(da)))
    return out


def residual_thermal(stages, f):
    """Thermal photons reaching the device, ``Σ A_i / (e^{hf/k_B T_i} - 1)``."""
    total = 0.0
    for temp, att in stages:
        if not 0 < att <= 1:
            raise ValueError("attenuation factors must be in (0, 1]")
        if temp > 0:
            total += att / np.expm1(H_PLANCK * f / (K_B * temp))
    return float(total)


# ---------------------------------------------------------------- de-embedding


@dataclass(frozen=True)
class DeembedResult:
    k: np.ndarray
    flags: np.ndarray  # True where the point lies in a masked stopband
    thru_slope: float  # rad/Hz of the fitted linear through-line phase


def _segments(valid):
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    return np.split(idx, breaks + 1)


def _unwrap_segmented(freqs, phase, valid, max_step):
    out = np.full_like(phase, np.nan, dtype=float)
    prev = None
    for seg in _segments(valid):
        steps = np.diff(phase[seg])
        wrapped = (steps + np.pi) % (2 * np.pi) - np.pi
        if np.any(np.abs(wrapped) > max_step):
            raise UnwrapError("phase step between grid points too close to π to unwrap")
        u = phase[seg[0]] + np.concatenate([[0.0], np.cumsum(wrapped)])
        if prev is not None:
            # carry the 2π branch across the gap by linear extrapolation
            (f0, p0), (f1, p1) = prev
            guess = p1 + (p1 - p0) / (f1 - f0) * (freqs[seg[0]] - f1)
            u += 2 * np.pi * np.round((guess - u[0]) / (2 * np.pi))
        out[seg] = u
        if seg.size >= 2:
            prev = ((freqs[seg[-2]], u[-2]), (freqs[seg[-1]], u[-1]))
        else:
            prev = ((freqs[seg[-1]] - 1.0, u[-1]), (freqs[seg[-1]], u[-1])) if prev is None else prev
    return out


def deembed_wavevector(freqs, phase_dut, phase_thru, n_cells, stopband_mask=None, max_step=0.9 * np.pi):
    """Wavevector (rad/cell) from measured transmission phases.

    Both phases follow ``φ = +k n`` (growing with frequency). The through
    line is modeled as purely linear, ``φ_thru ≈ a f``, fitted through the
    origin after unwrapping; the device phase is then
    ``k = (φ_dut - φ_thru + a f) / n_cells``. Unwrapping of the difference
    is anchored at zero at DC by extrapolating its lowest points.

    Parameters
    ----------
    stopband_mask : array_like of bool, optional
        Points that are not unwrapped and come back as NaN.
    max_step : float
        Largest wrapped phase step accepted between neighbouring points.
    """
    freqs = np.asarray(freqs, dtype=float)
    pd = np.asarray(phase_dut, dtype=float)
    pt = np.asarray(phase_thru, dtype=float)
    if not (freqs.shape == pd.shape == pt.shape):
        raise ValueError("frequency and phase arrays must share one grid")
    freqs = check_frequency_grid(freqs)
    mask = np.zeros(freqs.shape, bool) if stopband_mask is None else np.asarray(stopband_mask, bool)
    valid = ~mask

    thru = _unwrap_segmented(freqs, pt, np.ones_like(valid), max_step)
    # anchor: the linear model has no offset at DC
    lin = np.polyfit(freqs, thru, 1)
    thru -= 2 * np.pi * np.round(lin[1] / (2 * np.pi))
    slope = float(np.sum(freqs * thru) / np.sum(freqs**2))

    diff = _unwrap_segmented(freqs, pd - pt, valid, max_step)
    first = _segments(valid)[0]
    m = min(first.size, 5)
    if m >= 2:
        c = np.polyfit(freqs[first[:m]], diff[first[:m]], 1)
        offset = np.polyval(c, 0.0)
    else:
        offset = diff[first[0]]
    diff -= 2 * np.pi * np.round(offset / (2 * np.pi))
    k = (diff + slope * freqs) / n_cells
    k[mask] = np.nan
    return DeembedResult(k, mask.copy(), slope)
