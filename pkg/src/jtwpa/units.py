"""Unit conversions shared by every module.

Loss rates are power attenuation rates per unit cell: a field amplitude
decays as ``exp(-gamma * x / 2)`` and its power as ``exp(-gamma * x)``.
"""

import numpy as np
from scipy import constants

H_PLANCK = constants.h
HBAR = constants.hbar
K_B = constants.k
E_CHARGE = constants.e
PHI0 = constants.h / (2 * constants.e)

DB_PER_NEPER_POWER = 10.0 / np.log(10.0)


def db_to_linear(db):
    """Power ratio from decibels."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(ratio):
    return 10.0 * np.log10(ratio)


def dbm_to_watts(dbm):
    return 1e-3 * 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float) / 1e-3)


def loss_db_to_gamma(total_db, n_cells):
    """Per-cell power loss rate for a device with ``total_db`` (<= 0) insertion loss."""
    return -np.asarray(total_db, dtype=float) / (DB_PER_NEPER_POWER * n_cells)


def gamma_to_loss_db(gamma, n_cells):
    return -np.asarray(gamma, dtype=float) * n_cells * DB_PER_NEPER_POWER


def angular(f_hz):
    return 2.0 * np.pi * np.asarray(f_hz, dtype=float)


def bose_einstein(f_hz, temp_k):
    """Mean thermal occupation at ordinary frequency ``f_hz``; zero at T = 0."""
    f_hz = np.asarray(f_hz, dtype=float)
    temp_k = np.asarray(temp_k, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        x = H_PLANCK * f_hz / (K_B * temp_k)
        n = 1.0 / np.expm1(x)
    return np.where(temp_k > 0, n, 0.0)[()]
