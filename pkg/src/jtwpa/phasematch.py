"""Kerr-shifted wavevectors, phase mismatch and coupled-mode coupling constants.

All mismatches use one sign convention, the one of the coupled-mode
equations: pump wavevectors count positive, signal-band wavevectors negative
for pair creation (``sq``), and ``-k_w + k_partner - k_p + k_q`` for
conversion (``fc``). Each mismatch is linear in ``|β1|²`` and ``|β2|²``,
so it is stored as three coefficients (bare, per-pump-1, per-pump-2).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitParams, k_linear
from .errors import OverdriveError, StopbandError

BETA_MAX = 0.25


class ProcessKind(str, enum.Enum):
    PA = "PA"
    DFWM1 = "DFWM1"
    DFWM2 = "DFWM2"
    FC1 = "FC1"
    FC2 = "FC2"


# (family, p, q) with pump indices 0/1
_PROCESS_TERMS = {
    ProcessKind.PA: ("sq", 0, 1),
    ProcessKind.DFWM1: ("sq", 0, 0),
    ProcessKind.DFWM2: ("sq", 1, 1),
    ProcessKind.FC1: ("fc", 0, 1),
    ProcessKind.FC2: ("fc", 1, 0),
}


def check_betas(betas):
    b = np.abs(np.asarray(betas, dtype=complex))
    if np.any(b >= BETA_MAX):
        raise OverdriveError(f"|beta| = {b.max():.4f} >= {BETA_MAX} (pump current above I_c)")
    return b


def partner_frequency(family: str, f, pumps, p: int, q: int) -> float:
    """Frequency coupled to ``f`` by pumps ``p, q`` (0-based)."""
    if family == "sq":
        return pumps[p] + pumps[q] - f
    if family == "fc":
        return f + pumps[p] - pumps[q]
    raise ValueError(f"unknown process family {family!r}")


def process_partner(process: ProcessKind, f_s, pumps) -> float:
    family, p, q = _PROCESS_TERMS[ProcessKind(process)]
    return partner_frequency(family, f_s, pumps, p, q)


def kerr_coefficients(role, k):
    """(c0, c1, c2) with ``k̃ = c0 + c1 |β1|² + c2 |β2|²`` for a wave of bare ``k``.

    ``role`` is ``"signal"`` for any frequency away from the pumps, or the
    pump index 0 / 1.
    """
    if role == "signal":
        return np.array([k, 2 * k, 2 * k])
    if role == 0:
        return np.array([k, k, 2 * k])
    if role == 1:
        return np.array([k, 2 * k, k])
    raise ValueError(f"unknown role {role!r}")


def nonlinear_wavevector(f, role, betas, params: CircuitParams) -> float:
    """Kerr-shifted real wavevector of a signal-band wave or of pump ``role``.

    Signal band: ``(1 + 2Σ|β_p|²) k``. Pump p: ``(1 + |β_p|² + 2|β_q|²) k_p``.
    ``role`` is ``"signal"``, ``1`` or ``2`` (pump number, 1-based).
    """
    b = check_betas(betas)
    if role in (1, 2):
        f = params.pump_freqs[role - 1]
        role = role - 1
    elif role != "signal":
        raise ValueError("role must be 'signal', 1 or 2")
    coeffs = kerr_coefficients(role, k_linear(f, params))
    return float(coeffs @ np.array([1.0, b[0] ** 2, b[1] ** 2]))


def mismatch_coefficients(family, f, partner, p, q, params: CircuitParams, k=None):
    """Coefficients (bare, a1, a2) of the rotating-frame mismatch.

    ``k`` optionally maps frequency -> bare wavevector (for caching).
    """
    kf = k if k is not None else (lambda x: k_linear(x, params))
    sig = kerr_coefficients("signal", kf(f))
    par = kerr_coefficients("signal", kf(partner))
    pump_k = [kf(params.pump_freqs[0]), kf(params.pump_freqs[1])]
    kp = kerr_coefficients(p, pump_k[p])
    kq = kerr_coefficients(q, pump_k[q])
    if family == "sq":
        return -sig - par + kp + kq
    if family == "fc":
        return -sig + par - kp + kq
    raise ValueError(f"unknown process family {family!r}")


@dataclass(frozen=True)
class MismatchReport:
    process: ProcessKind
    f_signal: float
    f_partner: float
    delta_k: float
    bare: float
    kerr: tuple  # (pump-1 term, pump-2 term)

    def as_dict(self):
        return {
            "process": self.process.value,
            "f_signal_ghz": self.f_signal / 1e9,
            "f_partner_ghz": self.f_partner / 1e9,
            "delta_k_rad_per_cell": self.delta_k,
            "bare": self.bare,
            "kerr_pump1": self.kerr[0],
            "kerr_pump2": self.kerr[1],
        }


def delta_k(process, f_s, betas, params: CircuitParams) -> MismatchReport:
    """Phase mismatch of ``process`` for signal ``f_s`` at pump amplitudes ``betas``.

    Raises
    ------
    StopbandError
        If the signal or its partner lies in a stopband.
    """
    process = ProcessKind(process)
    b = check_betas(betas)
    family, p, q = _PROCESS_TERMS[process]
    partner = partner_frequency(family, f_s, params.pump_freqs, p, q)
    if partner <= 0:
        raise StopbandError(partner, f"partner frequency {partner:.3e} Hz is not positive")
    bare, a1, a2 = mismatch_coefficients(family, f_s, partner, p, q, params)
    kerr = (float(a1 * b[0] ** 2), float(a2 * b[1] ** 2))
    return MismatchReport(process, float(f_s), float(partner), float(bare + sum(kerr)), float(bare), kerr)


def mismatch_table(freqs, betas, params: CircuitParams, processes=tuple(ProcessKind)):
    """Rows ``(f_GHz, process, Δk)``; stopband points carry NaN."""
    rows = []
    for f in np.asarray(freqs, dtype=float):
        for proc in processes:
            try:
                dk = delta_k(proc, f, betas, params).delta_k
            except StopbandError:
                dk = float("nan")
            rows.append((f / 1e9, ProcessKind(proc).value, dk))
    return rows


def couplings(f, betas_at_x, params: CircuitParams) -> dict:
    """Coupling constants and rotating-frame mismatches for signal frequency ``f``.

    Returns a dict keyed by ``(p, q)`` (1-based pump numbers) with entries
    ``lambda_fc``, ``lambda_sq``, ``dk_fc``, ``dk_sq`` and the partner
    frequencies. An entry whose partner frequency is non-positive or inside
    a stopband is omitted (``p == q`` conversion is the cross-phase term and
    has partner ``f`` itself).
    """
    betas = np.asarray(betas_at_x, dtype=complex)
    b = check_betas(betas)
    powers = np.array([1.0, b[0] ** 2, b[1] ** 2])
    pumps = params.pump_freqs
    k_w = k_linear(f, params)
    out = {}
    for p in (0, 1):
        for q in (0, 1):
            entry = {}
            f_fc = partner_frequency("fc", f, pumps, p, q)
            f_sq = partner_frequency("sq", f, pumps, p, q)
            for family, fp in (("fc", f_fc), ("sq", f_sq)):
                if fp <= 0:
                    continue
                try:
                    k_par = k_linear(fp, params)
                except StopbandError:
                    continue
                amp = np.conj(betas[p]) * betas[q] if family == "fc" else betas[p] * betas[q]
                entry[f"lambda_{family}"] = complex(amp * np.sqrt(k_w * k_par))
                coeffs = mismatch_coefficients(family, f, fp, p, q, params)
                entry[f"dk_{family}"] = float(coeffs @ powers)
                entry[f"f_{family}"] = float(fp)
            out[(p + 1, q + 1)] = entry
    return out
