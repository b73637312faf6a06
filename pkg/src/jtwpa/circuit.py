"""Linear dispersion and insertion loss of the resonator-loaded junction line.

Wavevectors are in radians per unit cell (cell length 1), so the device
length equals ``n_cells``. Frequencies are ordinary (Hz) at the interface
and converted to angular frequency internally.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import StopbandError
from .units import DB_PER_NEPER_POWER, PHI0, angular


@dataclass(frozen=True)
class ResonatorBank:
    """A set of identical phase-matching LC resonators.

    Parameters
    ----------
    f_res : float
        Bare resonance frequency in Hz.
    c_res : float
        Resonator capacitance in F.
    c_couple : float
        Coupling capacitance to the line in F.
    insertion_period : int
        One resonator every ``insertion_period`` unit cells.
    """

    f_res: float
    c_res: float
    c_couple: float
    insertion_period: int = 10

    def __post_init__(self):
        if self.f_res <= 0 or self.c_res <= 0:
            raise ValueError("resonator frequency and capacitance must be positive")
        if self.c_couple < 0:
            raise ValueError("coupling capacitance must be >= 0")
        if self.insertion_period < 1:
            raise ValueError("insertion_period must be >= 1")

    @property
    def l_res(self) -> float:
        return 1.0 / (angular(self.f_res) ** 2 * self.c_res)


@dataclass(frozen=True)
class CircuitParams:
    n_cells: int
    c_ground: float
    i_critical: float
    c_junction: float = 0.0
    tan_delta: float = 0.0
    resonators: tuple = ()
    pump_freqs: tuple = (5.2984e9, 8.109e9)

    def __post_init__(self):
        if self.n_cells <= 0:
            raise ValueError("n_cells must be positive")
        if self.i_critical <= 0 or self.c_ground <= 0:
            raise ValueError("i_critical and c_ground must be positive")
        if self.tan_delta < 0:
            raise ValueError("tan_delta must be >= 0")
        if self.c_junction < 0:
            raise ValueError("c_junction must be >= 0")
        object.__setattr__(self, "resonators", tuple(self.resonators))
        object.__setattr__(self, "pump_freqs", tuple(float(f) for f in self.pump_freqs))

    @property
    def l_junction(self) -> float:
        """Junction inductance Φ0 / (2π I_c)."""
        return PHI0 / (2 * np.pi * self.i_critical)

    def replace(self, **changes) -> CircuitParams:
        return replace(self, **changes)

    def lossless(self) -> CircuitParams:
        return replace(self, tan_delta=0.0)


def paper_device(tan_delta: float = 4.9e-3) -> CircuitParams:
    """Fabricated dual-dispersion device: 3141 cells and two resonator banks."""
    return CircuitParams(
        n_cells=3141,
        c_ground=28.616e-15,
        i_critical=3.14e-6,
        c_junction=0.0,
        tan_delta=tan_delta,
        resonators=(
            ResonatorBank(f_res=5.2815e9, c_res=6.653e-12, c_couple=28.616e-15),
            ResonatorBank(f_res=8.169e9, c_res=2.781e-12, c_couple=28.616e-15),
        ),
        pump_freqs=(5.2984e9, 8.109e9),
    )


def xi_squared(f, params: CircuitParams, tan_delta=None):
    """Squared admittance-loading factor of the resonator banks."""
    t = params.tan_delta if tan_delta is None else tan_delta
    w2 = angular(f) ** 2
    lossy = 1.0 - 1j * t
    out = np.ones_like(w2, dtype=complex)
    for bank in params.resonators:
        ratio = bank.c_couple / (bank.insertion_period * params.c_ground)
        lr = bank.l_res
        num = 1.0 - w2 * lr * bank.c_res * lossy
        den = 1.0 - w2 * lr * (bank.c_res + bank.c_couple) * lossy
        with np.errstate(divide="ignore", invalid="ignore"):
            out = out - ratio + ratio * num / den
    return out


def in_stopband(f, params: CircuitParams, tan_delta=None):
    """Boolean mask of frequencies with no propagating solution."""
    f = np.asarray(f, dtype=float)
    xi2 = xi_squared(f, params, tan_delta)
    plasma = 1.0 - angular(f) ** 2 * params.l_junction * params.c_junction
    return ~np.isfinite(xi2) | (xi2.real < 0) | (plasma <= 0)


def wavevector(f, params: CircuitParams, tan_delta_override=None, on_stopband="raise"):
    """Complex wavevector (rad/cell) of the loaded line.

    ``k = ω sqrt(L_J C_g (1 - i tanδ)) / sqrt(1 - ω² L_J C_J) * ξ``. The loss
    tangent makes ``Im k <= 0``; a forward wave ``exp(-i k x)`` then decays.

    Parameters
    ----------
    f : float or array_like
        Frequency in Hz, > 0.
    params : CircuitParams
    tan_delta_override : float, optional
        Replaces ``params.tan_delta``.
    on_stopband : {"raise", "nan"}
        Raise :class:`StopbandError`, or return NaN at stopband points.

    Returns
    -------
    complex or ndarray of complex
    """
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ValueError("frequency must be positive")
    t = params.tan_delta if tan_delta_override is None else tan_delta_override
    w = angular(f_arr)
    lj = params.l_junction
    xi2 = xi_squared(f_arr, params, t)
    plasma = 1.0 - w**2 * lj * params.c_junction
    bad = ~np.isfinite(xi2) | (xi2.real < 0) | (plasma <= 0)
    if np.any(bad) and on_stopband == "raise":
        raise StopbandError(float(np.atleast_1d(f_arr)[np.argmax(np.atleast_1d(bad))]))
    with np.errstate(invalid="ignore"):
        k = w * np.sqrt(lj * params.c_ground * (1.0 - 1j * t) + 0j) / np.sqrt(plasma + 0j) * np.sqrt(xi2)
    k = np.where(bad, np.nan + 1j * np.nan, k)
    return k[()] if k.ndim == 0 else k


def k_linear(f, params: CircuitParams):
    """Real lossless wavevector used by the nonlinear coupled-mode model."""
    k = wavevector(f, params, tan_delta_override=0.0)
    return np.real(k)[()] if np.ndim(k) else float(np.real(k))


def loss_per_cell_db(f, params: CircuitParams):
    """Insertion loss of one unit cell in dB (negative for a lossy line)."""
    k = wavevector(f, params)
    # power attenuation per cell is -2 Im k nepers
    return DB_PER_NEPER_POWER * 2.0 * np.imag(k)


def insertion_loss_db(f, params: CircuitParams):
    """Total insertion loss ``20 log10 |exp(-i k n_cells)|`` in dB."""
    return loss_per_cell_db(f, params) * params.n_cells


def dispersion_table(freqs, params: CircuitParams):
    """Rows of (f_GHz, Re k, Im k, total loss dB); stopband points are NaN."""
    freqs = np.asarray(freqs, dtype=float)
    k = wavevector(freqs, params, on_stopband="nan")
    loss = 20.0 / np.log(10.0) * np.imag(k) * params.n_cells
    return np.column_stack([freqs / 1e9, k.real, k.imag, loss])
