"""Loss rates along the line, including TLS saturation and a lumped worst case.

Rates are power attenuation per cell (see :mod:`jtwpa.units`).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import TableRangeError, TableRangeWarning
from .units import H_PLANCK, K_B, bose_einstein, db_to_linear, loss_db_to_gamma

# -5 dB plateau up to 50 mK, -1 dB from 800 mK; shape in between is a stand-in
DEFAULT_LOSS_TABLE = ((1e-4, -5.0), (0.05, -5.0), (0.8, -1.0), (1e4, -1.0))
DEFAULT_FRIDGE_TEMP = 0.030


class LossKind(str, enum.Enum):
    CONSTANT = "constant"
    LUMPED_AT_END = "lumped_at_end"
    DISTRIBUTED = "distributed"
    SATURABLE = "saturable"


@dataclass(frozen=True)
class LossProfile:
    """Loss applied to the signal-band modes.

    Parameters
    ----------
    kind : LossKind
    total_db : float
        Insertion loss of the whole device (<= 0) for the non-saturable kinds.
    n_cells : int
    table : tuple of (temperature K, total dB)
        Saturable kind only. Temperatures strictly increasing, loss magnitude
        non-increasing. Interpolated linearly in dB against log temperature.
    fridge_temp : float
        Sets the thermal occupation floor added to the driven photon number.
    out_of_range : {"warn", "clamp", "raise"}
        Policy when the effective temperature leaves the table.
    pump_loss_db : float
        Total pump insertion loss (used for the pump decay rate).
    """

    kind: LossKind = LossKind.DISTRIBUTED
    total_db: float = 0.0
    n_cells: int = 3141
    table: tuple = DEFAULT_LOSS_TABLE
    fridge_temp: float = DEFAULT_FRIDGE_TEMP
    out_of_range: str = "warn"
    pump_loss_db: float = -1.0
    _log_t: np.ndarray = field(init=False, repr=False, compare=False)
    _db: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if self.total_db > 0 or self.pump_loss_db > 0:
            raise ValueError("loss in dB must be <= 0")
        if self.n_cells <= 0:
            raise ValueError("n_cells must be positive")
        if self.out_of_range not in ("warn", "clamp", "raise"):
            raise ValueError("out_of_range must be 'warn', 'clamp' or 'raise'")
        table = tuple((float(t), float(db)) for t, db in self.table)
        temps = np.array([t for t, _ in table])
        dbs = np.array([db for _, db in table])
        if len(table) < 1 or np.any(temps <= 0) or np.any(np.diff(temps) <= 0):
            raise ValueError("table temperatures must be positive and strictly increasing")
        if np.any(dbs > 0) or np.any(np.diff(np.abs(dbs)) > 0):
            raise ValueError("table loss must be <= 0 dB with magnitude non-increasing in temperature")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "_log_t", np.log(temps))
        object.__setattr__(self, "_db", dbs)

    @property
    def saturable(self) -> bool:
        return self.kind is LossKind.SATURABLE

    def n_thermal_floor(self, f):
        return bose_einstein(f, self.fridge_temp)

    def table_db(self, temp):
        """Total insertion loss from the table at effective temperature ``temp``."""
        temp = np.asarray(temp, dtype=float)
        lo, hi = np.exp(self._log_t[0]), np.exp(self._log_t[-1])
        outside = (temp < lo) | (temp > hi)
        if np.any(outside):
            msg = f"effective temperature outside loss table [{lo:g}, {hi:g}] K"
            if self.out_of_range == "raise":
                raise TableRangeError(msg)
            if self.out_of_range == "warn":
                warnings.warn(msg, TableRangeWarning, stacklevel=3)
        with np.errstate(divide="ignore"):
            logt = np.log(np.clip(temp, lo, hi))
        return np.interp(logt, self._log_t, self._db)[()]

    def gamma_pump(self):
        return float(loss_db_to_gamma(self.pump_loss_db, self.n_cells))

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "total_db": self.total_db,
            "n_cells": self.n_cells,
            "table": [{"temp_k": t, "loss_db_total": db} for t, db in self.table],
            "fridge_temp_k": self.fridge_temp,
            "pump_loss_db": self.pump_loss_db,
        }


def photons_to_temperature(n, f):
    """Temperature whose Bose-Einstein occupation at ``f`` (Hz) is ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise ValueError("photon number must be >= 0")
    with np.errstate(divide="ignore"):
        t = H_PLANCK * np.asarray(f, dtype=float) / (K_B * np.log1p(1.0 / n))
    return np.where(n > 0, t, 0.0)[()]


def gamma_at(f, x, n_local, profile: LossProfile):
    """Power loss rate per cell at frequency ``f`` and position ``x``.

    ``x`` is accepted for interface completeness; no profile here varies
    with position (the lumped kind applies its loss after the device).
    """
    kind = profile.kind
    if kind in (LossKind.CONSTANT, LossKind.DISTRIBUTED):
        g = loss_db_to_gamma(profile.total_db, profile.n_cells)
        return np.broadcast_to(g, np.shape(n_local))[()] if np.ndim(n_local) else float(g)
    if kind is LossKind.LUMPED_AT_END:
        return np.zeros(np.shape(n_local))[()] if np.ndim(n_local) else 0.0
    n_eff = np.asarray(n_local, dtype=float) + profile.n_thermal_floor(f)
    temp = photons_to_temperature(np.maximum(n_eff, 0.0), f)
    return loss_db_to_gamma(profile.table_db(temp), profile.n_cells)[()]


def lumped_end_loss(value, total_db):
    """Apply a beamsplitter of transmission ``η = 10^{dB/10}`` with vacuum ancilla.

    ``value`` is either a quadrature variance (vacuum 1/2) or a 2n×2n
    correlation matrix in the ``[[<cc>, <cc†>], [<c†c>, <c†c†>]]`` layout.
    """
    if total_db > 0:
        raise ValueError("total_db must be <= 0")
    eta = float(db_to_linear(total_db))
    arr = np.asarray(value)
    if arr.ndim < 2:
        return (eta * arr + (1 - eta) / 2)[()]
    n = arr.shape[0] // 2
    out = eta * arr.astype(complex)
    # vacuum ancilla contributes only to <c c†>
    out[:n, n:] += (1 - eta) * np.eye(n)
    return out
