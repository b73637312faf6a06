"""Seeded synthetic data for tests, demos and the golden dataset."""

from __future__ import annotations

import numpy as np

from .analysis import QuadratureDataset
from .calibration import sntj_model, wqed_transmission


def _exact_cov(rng, n, cov):
    """``n`` zero-mean samples whose sample covariance equals ``cov`` exactly."""
    z = rng.standard_normal((n, 2))
    z -= z.mean(axis=0)
    c = np.cov(z, rowvar=False)
    z = z @ np.linalg.inv(np.linalg.cholesky(c)).T
    return z @ np.linalg.cholesky(cov).T


def _rot_cov(v_min, v_max, angle):
    c, s = np.cos(angle), np.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag([v_max, v_min]) @ R.T


def single_mode_dataset(var_min, var_max, var_off, angle=0.3, n=4000, seed=0, exact=True, metadata=None):
    """Pump-on samples with principal variances ``(var_min, var_max)`` and
    isotropic pump-off samples of variance ``var_off`` (mV²).

    With ``exact`` the sample covariances equal the requested ones to
    rounding, which makes the dataset a golden reference.
    """
    rng = np.random.default_rng(seed)
    cov_on = _rot_cov(var_min, var_max, angle)
    cov_off = np.eye(2) * var_off
    if exact:
        on, off = _exact_cov(rng, n, cov_on), _exact_cov(rng, n, cov_off)
    else:
        on = rng.multivariate_normal(np.zeros(2), cov_on, n)
        off = rng.multivariate_normal(np.zeros(2), cov_off, n)
    # interleave on/off records as acquired
    iq = np.empty((2 * n, 2))
    iq[0::2], iq[1::2] = off, on
    state = np.tile(np.array(["off", "on"]), n)
    return QuadratureDataset(iq[:, 0], iq[:, 1], state, np.full(2 * n, "single"), dict(metadata or {}))


def two_mode_pairs(n, r, phi0=0.0, nu=1.0, seed=0, vac=0.5):
    """Signal/idler I/Q pairs of a two-mode squeezed vacuum.

    Built so that ``X_s + X_i`` and ``P_s - P_i`` are squeezed by ``e^{-2r}``
    once the idler is scaled by ``nu`` and rotated by ``phi0``; the returned
    idler therefore carries scale ``1/nu`` and rotation ``-phi0``.
    """
    rng = np.random.default_rng(seed)
    sq, asq = vac * np.exp(-2 * r), vac * np.exp(2 * r)
    # collective quadratures (normalized), independent Gaussians
    xp = rng.normal(0, np.sqrt(sq), n)
    xm = rng.normal(0, np.sqrt(asq), n)
    pp = rng.normal(0, np.sqrt(asq), n)
    pm = rng.normal(0, np.sqrt(sq), n)
    xs, xi = (xp + xm) / np.sqrt(2), (xp - xm) / np.sqrt(2)
    ps, pi = (pp + pm) / np.sqrt(2), (pp - pm) / np.sqrt(2)
    signal = np.column_stack([xs, ps])
    c, s = np.cos(-phi0), np.sin(-phi0)
    idler = np.column_stack([xi * c - pi * s, xi * s + pi * c]) / nu
    return signal, idler


def sntj_curve(v, temp, t_noise, gain, bandwidth, f, rel_noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    n = sntj_model(v, temp, t_noise, gain, bandwidth, f)
    return n * (1 + rel_noise * rng.standard_normal(np.shape(v)))


def wqed_scan(detuning, omegas, gamma1, gamma2, xi=1.0, noise=0.0, seed=0):
    """Flattened ``(delta, row, s21)`` for every detuning and drive amplitude."""
    rng = np.random.default_rng(seed)
    D, K = np.meshgrid(np.asarray(detuning, float), np.arange(len(omegas)))
    d, k = D.ravel(), K.ravel()
    t = wqed_transmission(d, np.asarray(omegas, float)[k], gamma1, gamma2, xi)
    t = t + noise * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
    return d, k, t
