"""Estimator-style front end to the coupled-mode solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .circuit import CircuitParams, paper_device
from .pump import fit_cp
from .solver import SimulationSetup, gain_db, simulate_point


class ParametricAmpSimulator(RegressorMixin, BaseEstimator):
    """Gain and squeezing of the dual-pump amplifier as an estimator.

    ``fit(P2, gain_db)`` calibrates the shared power constant c_p against a
    gain-versus-pump-2-power curve taken at ``f_fit`` with pump 1 held at
    ``p1``. ``predict(freqs)`` returns the signal gain in dB at the
    configured powers; :meth:`squeezing` gives the full squeezing record.

    Parameters
    ----------
    params : CircuitParams, optional
        Defaults to the fabricated device.
    loss : LossProfile, optional
    p1, p2 : float
        Pump powers at the device input (W).
    c_p : float
        Power-to-|β|² constant (1/W), shared by both pumps.
    depth : int
        Mode-ladder depth.
    f_fit : float, optional
        Signal frequency for :meth:`fit`; 1 MHz above the pump midpoint by default.
    """

    def __init__(self, params=None, loss=None, p1=1.57e-9, p2=0.665e-9, c_p=4.6e9, depth=0, f_fit=None, rtol=1e-10, atol=1e-12):
        self.params = params
        self.loss = loss
        self.p1 = p1
        self.p2 = p2
        self.c_p = c_p
        self.depth = depth
        self.f_fit = f_fit
        self.rtol = rtol
        self.atol = atol

    def _params(self) -> CircuitParams:
        return self.params if self.params is not None else paper_device()

    def _f_fit(self):
        if self.f_fit is not None:
            return self.f_fit
        return sum(self._params().pump_freqs) / 2 + 1e6

    def setup(self, c_p=None, p2=None) -> SimulationSetup:
        c = self.c_p if c_p is None else c_p
        return SimulationSetup(
            params=self._params(),
            loss=self.loss,
            depth=self.depth,
            powers_w=(self.p1, self.p2 if p2 is None else p2),
            c_p=(c, c),
            rtol=self.rtol,
            atol=self.atol,
        )

    def gain_at_power(self, c_p, p2):
        return gain_db(self.setup(c_p, p2), self._f_fit())

    def fit(self, X, y):
        p2 = np.asarray(X, dtype=float).reshape(-1)
        self.c_p_, self.fit_result_ = fit_cp(p2, y, self.gain_at_power, self.c_p)
        return self

    def _current(self):
        return getattr(self, "c_p_", self.c_p)

    def predict(self, X):
        setup = self.setup(self._current())
        return np.array([gain_db(setup, f) for f in np.asarray(X, dtype=float).reshape(-1)])

    def squeezing(self, X):
        setup = self.setup(self._current())
        return [simulate_point(setup, f) for f in np.asarray(X, dtype=float).reshape(-1)]
