"""Linearized coupled-mode integration for gain, squeezing and purity.

The mode vector is ``[c_1..c_n, c_1†..c_n†]`` and both the mean field and
the correlation matrix obey ``d/dx = M(x) (.)`` with
``M = iKH - Γ/2``. Couplings are written in the frame co-rotating with the
Kerr-shifted wavevectors, so pump amplitudes enter as ``|β_p(x)| e^{iφ_p}``
and all self- and cross-phase modulation sits in the accumulated mismatch
phase ``Φ(x) = Δk_bare x + a_1 I_1(x) + a_2 I_2(x)``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .circuit import CircuitParams, k_linear, wavevector
from .errors import IntegrationError, JTWPAError
from .lossmodel import LossKind, LossProfile, gamma_at, lumped_end_loss
from .modeladder import ModeSet, build_modes
from .phasematch import check_betas, mismatch_coefficients
from .pump import PumpState, calibrate_beta_from_power, power_integrals
from .units import db_to_linear
from .validation import check_correlation_matrix

log = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class SystemMatrices:
    """``K``, ``H`` and ``Γ`` at one position ``x``."""

    K: np.ndarray
    H: np.ndarray
    Gamma: np.ndarray
    x: float

    @property
    def n(self):
        return self.K.shape[0] // 2

    @property
    def lambda1(self):
        return self.H[: self.n, : self.n]

    @property
    def lambda2(self):
        return self.H[: self.n, self.n :]

    def generator(self):
        return 1j * self.K @ self.H - self.Gamma / 2


class CoupledModeSystem:
    """Position-dependent coupled-mode problem for one mode set.

    Parameters
    ----------
    modes : ModeSet
    pumps : tuple of PumpState
        Pump frequencies must equal the mode set's pumps; ``k`` and
        ``gamma`` are taken from the states.
    params : CircuitParams
    loss : LossProfile, optional
        Signal-band loss; lossless when omitted.
    """

    def __init__(self, modes: ModeSet, pumps, params: CircuitParams, loss: LossProfile | None = None):
        self.modes = modes
        self.pumps = tuple(pumps)
        self.params = params
        self.loss = loss
        self.length = float(params.n_cells)
        check_betas([p.beta0 for p in self.pumps])
        n = modes.n
        self.n = n
        self.freqs = np.array(modes.freqs)
        kcache = {}

        def kf(f):
            key = round(f)
            if key not in kcache:
                kcache[key] = float(k_linear(f, params))
            return kcache[key]

        self._k = np.array([kf(f) for f in self.freqs])
        # term table: block (0 = Λ1, 1 = Λ2), row, col, p, q, prefactor, (bare, a1, a2)
        rows, cols, blocks, ps, qs, pref, coeffs = [], [], [], [], [], [], []
        for i in range(n):
            for (p, q), j in modes.fc_partners[i].items():
                c = mismatch_coefficients("fc", self.freqs[i], self.freqs[j], p, q, params, k=kf)
                rows.append(i), cols.append(j), blocks.append(0), ps.append(p), qs.append(q)
                pref.append(2.0 * np.sqrt(self._k[i] * self._k[j]))
                coeffs.append(c)
            for (p, q), j in modes.sq_partners[i].items():
                c = mismatch_coefficients("sq", self.freqs[i], self.freqs[j], p, q, params, k=kf)
                rows.append(i), cols.append(j), blocks.append(1), ps.append(p), qs.append(q)
                pref.append(np.sqrt(self._k[i] * self._k[j]))
                coeffs.append(c)
        self._rows = np.array(rows, dtype=int)
        self._cols = np.array(cols, dtype=int)
        self._is_fc = np.array(blocks, dtype=int) == 0
        self._p = np.array(ps, dtype=int)
        self._q = np.array(qs, dtype=int)
        self._pref = np.array(pref, dtype=float)
        self._coeffs = np.array(coeffs, dtype=float).reshape(-1, 3)
        self._phase0 = np.array([np.exp(1j * np.angle(p.beta0)) for p in self.pumps])
        self._b0 = np.array([abs(p.beta0) for p in self.pumps])
        self._gp = np.array([p.gamma for p in self.pumps])
        self.K = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
        self._gamma_fixed = self._fixed_gammas()

    @property
    def saturable(self):
        return self.loss is not None and self.loss.kind is LossKind.SATURABLE

    @property
    def lumped_db(self):
        if self.loss is not None and self.loss.kind is LossKind.LUMPED_AT_END:
            return self.loss.total_db
        return 0.0

    def _fixed_gammas(self):
        if self.loss is None or self.saturable:
            return np.zeros(self.n)
        return np.array([gamma_at(f, 0.0, 0.0, self.loss) for f in self.freqs], dtype=float)

    def gammas(self, x, photons=None):
        """Per-mode loss rates; ``photons`` are the current ``<c_i† c_i>``."""
        if not self.saturable:
            return self._gamma_fixed
        if photons is None:
            photons = np.zeros(self.n)
        return np.array([gamma_at(f, x, max(float(n), 0.0), self.loss) for f, n in zip(self.freqs, photons)])

    def pump_amplitudes(self, x):
        """``|β_p(x)| e^{iφ_p}``: pump amplitudes without their Kerr phase."""
        return self._b0 * np.exp(-self._gp * x / 2) * self._phase0

    def couplings_at(self, x):
        """``(Λ1, Λ2)`` at position ``x``."""
        n = self.n
        lam1 = np.zeros((n, n), dtype=complex)
        lam2 = np.zeros((n, n), dtype=complex)
        if self._rows.size == 0:
            return lam1, lam2
        b = self.pump_amplitudes(x)
        i1, i2 = power_integrals(self.pumps, x)
        phi = self._coeffs @ np.array([x, i1, i2])
        bp = np.where(self._is_fc, np.conj(b[self._p]), b[self._p])
        vals = self._pref * bp * b[self._q] * np.exp(-1j * phi)
        fc = self._is_fc
        np.add.at(lam1, (self._rows[fc], self._cols[fc]), vals[fc])
        np.add.at(lam2, (self._rows[~fc], self._cols[~fc]), vals[~fc])
        return lam1, lam2

    def matrices(self, x, photons=None) -> SystemMatrices:
        lam1, lam2 = self.couplings_at(x)
        H = np.block([[lam1, lam2], [np.conj(lam2), np.conj(lam1)]])
        g = self.gammas(x, photons)
        return SystemMatrices(self.K, H, np.diag(np.concatenate([g, g])), float(x))

    def generator(self, x, photons=None):
        """``M = iKH - Γ/2`` at ``x``."""
        lam1, lam2 = self.couplings_at(x)
        g = self.gammas(x, photons)
        n = self.n
        M = np.empty((2 * n, 2 * n), dtype=complex)
        M[:n, :n] = 1j * lam1 - np.diag(g) / 2
        M[:n, n:] = 1j * lam2
        M[n:, :n] = -1j * np.conj(lam2)
        M[n:, n:] = -1j * np.conj(lam1) - np.diag(g) / 2
        return M, g


def assemble(modes: ModeSet, pumps, loss: LossProfile | None, x, params: CircuitParams) -> SystemMatrices:
    """System matrices of the mode set at position ``x``."""
    return CoupledModeSystem(modes, pumps, params, loss).matrices(x)


def vacuum_correlation(n):
    C = np.zeros((2 * n, 2 * n), dtype=complex)
    C[:n, n:] = np.eye(n)
    return C


def _solve(system: CoupledModeSystem, want_S, want_C, t_eval=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    n2 = 2 * system.n
    sz = n2 * n2
    need_C = want_C or system.saturable
    y0 = []
    if want_S:
        y0.append(np.eye(n2, dtype=complex).ravel())
    if need_C:
        y0.append(vacuum_correlation(system.n).ravel())
    y0 = np.concatenate(y0)
    n = system.n

    def rhs(x, y):
        off = 0
        photons = None
        if need_C:
            C = y[sz if want_S else 0 :].reshape(n2, n2)
            photons = np.real(np.diag(C[n:, :n]))
        M, g = system.generator(x, photons)
        out = np.empty_like(y)
        if want_S:
            out[:sz] = (M @ y[:sz].reshape(n2, n2)).ravel()
            off = sz
        if need_C:
            dC = M @ C + C @ M.T
            dC[:n, n:] += np.diag(g)
            out[off:] = dC.ravel()
        return out

    sol = solve_ivp(rhs, (0.0, system.length), y0, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}")
    S = sol.y[:sz, -1].reshape(n2, n2) if want_S else None
    Cs = None
    if need_C:
        start = sz if want_S else 0
        Cs = sol.y[start:].T.reshape(-1, n2, n2)
    return S, Cs, sol


@dataclass(frozen=True)
class MeanResult:
    g: complex
    G: float
    S: np.ndarray = field(repr=False)

    @property
    def gain_db(self):
        return float(10 * np.log10(self.G))


def integrate_mean(system: CoupledModeSystem, alpha_in=1.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> MeanResult:
    """Complex gain ``g = <c_0(z)>/α`` and power gain of the signal mode.

    Also returns the fundamental matrix ``S`` with ``<c(z)> = S <c(0)>``.
    A lumped output loss multiplies ``S`` by ``√η``.
    """
    if alpha_in == 0:
        raise ValueError("alpha_in must be nonzero")
    S, _, _ = _solve(system, True, False, rtol=rtol, atol=atol)
    S = S * np.sqrt(db_to_linear(system.lumped_db))
    n = system.n
    v0 = np.zeros(2 * n, dtype=complex)
    v0[0], v0[n] = alpha_in, np.conj(alpha_in)
    g = (S @ v0)[0] / alpha_in
    return MeanResult(complex(g), float(abs(g) ** 2), S)


def phase_sensitive_gain(system: CoupledModeSystem, thetas, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Gain versus probe phase for the degenerate center mode, and PSER in dB.

    Returns
    -------
    gains : ndarray
        ``|<c_0(z)>|² / |α|²`` for ``α = e^{iθ}``.
    pser_db : float
        ``10 log10(max G / min G)``.
    """
    thetas = np.asarray(thetas, dtype=float)
    res = integrate_mean(system, rtol=rtol, atol=atol)
    S, n = res.S, system.n
    out = np.abs(S[0, 0] + S[0, n] * np.exp(-2j * thetas)) ** 2
    return out, float(10 * np.log10(out.max() / out.min()))


@dataclass(frozen=True)
class CorrelationResult:
    C: np.ndarray
    xs: np.ndarray = field(default=None, repr=False)
    history: np.ndarray = field(default=None, repr=False)


def integrate_correlation(system: CoupledModeSystem, checkpoints=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> CorrelationResult:
    """Correlation matrix at the output, starting from vacuum.

    ``dC/dx = M C + C Mᵀ + [[0, Γ], [0, 0]]`` with ``M = iKH - Γ/2``. Under a
    saturable profile the loss rates follow ``<c_i† c_i>`` at every stage.
    ``checkpoints`` optionally requests interior positions (returned in
    ``history``; the last row is always ``x = z``).
    """
    t_eval = None
    if checkpoints is not None:
        t_eval = np.unique(np.concatenate([np.asarray(checkpoints, dtype=float), [system.length]]))
    _, Cs, sol = _solve(system, False, True, t_eval=t_eval, rtol=rtol, atol=atol)
    C = Cs[-1]
    if system.lumped_db:
        C = lumped_end_loss(C, system.lumped_db)
    return CorrelationResult(C, sol.t, Cs if checkpoints is not None else None)


@dataclass(frozen=True)
class SqueezeResult:
    theta_opt: float
    var_min: float
    var_max: float
    s_min_db: float
    s_max_db: float
    purity: float

    def as_dict(self):
        return asdict(self)


def squeezing_variance(C, i, j, theta):
    """``ΔY²_ij(θ)`` normalized so that vacuum gives 1/2 for ``i == j`` too."""
    n = C.shape[0] // 2
    idx = [i, j]
    a = sum(C[n + a_, b_] + C[a_, n + b_] for a_ in idx for b_ in idx)
    s = sum(C[n + a_, n + b_] for a_ in idx for b_ in idx)
    val = 0.25 * np.real(a - 2 * np.exp(1j * np.asarray(theta)) * s)
    return val / 2 if i == j else val


def squeeze(C, i=0, j=0) -> SqueezeResult:
    """Squeezing and anti-squeezing between modes ``i`` and ``j`` of ``C``.

    ``θ_opt`` makes ``e^{iθ} <c_i† c_j†>`` real and non-negative; the
    anti-squeezed quadrature is at ``θ_opt + π``.
    """
    C = check_correlation_matrix(C)
    n = C.shape[0] // 2
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("mode index out of range")
    m = C[n + i, n + j]
    theta = float(-np.angle(m)) if abs(m) > 0 else 0.0
    v_min = float(squeezing_variance(C, i, j, theta))
    v_max = float(squeezing_variance(C, i, j, theta + np.pi))
    if v_min > v_max:
        v_min, v_max = v_max, v_min
    s_minus, s_plus = v_min / 0.5, v_max / 0.5
    return SqueezeResult(
        theta_opt=theta,
        var_min=v_min,
        var_max=v_max,
        s_min_db=float(10 * np.log10(s_minus)),
        s_max_db=float(10 * np.log10(s_plus)),
        purity=float(1 / np.sqrt(s_minus * s_plus)),
    )


# ---------------------------------------------------------------- setups


@dataclass(frozen=True)
class SimulationSetup:
    """Everything needed to simulate one bias point.

    Either ``betas`` (input pump amplitudes) or ``powers_w`` together with
    ``c_p`` fixes the pumps; powers are converted with the loss profile's
    pump decay rate.
    """

    params: CircuitParams
    loss: LossProfile | None = None
    depth: int = 0
    betas: tuple | None = None
    powers_w: tuple | None = None
    c_p: tuple | None = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def pump_gamma(self):
        return self.loss.gamma_pump() if self.loss is not None else 0.0

    def pump_states(self):
        gp = self.pump_gamma()
        ks = [float(k_linear(f, self.params)) for f in self.params.pump_freqs]
        if self.betas is not None:
            b = [complex(v) for v in self.betas]
        elif self.powers_w is not None and self.c_p is not None:
            b = [
                np.sqrt(calibrate_beta_from_power(P, gp, k, self.params.n_cells, c)) if P > 0 else 0.0
                for P, k, c in zip(self.powers_w, ks, self.c_p)
            ]
        else:
            b = [0.0, 0.0]
        return tuple(PumpState(f, complex(bb), k, gp) for f, bb, k in zip(self.params.pump_freqs, b, ks))

    def system(self, f_signal) -> CoupledModeSystem:
        modes = build_modes(f_signal, self.params.pump_freqs, self.depth)
        for f in modes.freqs:
            wavevector(f, self.params)  # raises StopbandError
        return CoupledModeSystem(modes, self.pump_states(), self.params, self.loss)

    def with_(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


def partner_index(modes: ModeSet):
    """Index of the pair-creation partner of the signal (0 when degenerate)."""
    j = modes.sq_partners[0].get((0, 1))
    return 0 if j is None else j


def gain_db(setup: SimulationSetup, f_signal) -> float:
    return integrate_mean(setup.system(f_signal), rtol=setup.rtol, atol=setup.atol).gain_db


def simulate_point(setup: SimulationSetup, f_signal) -> dict:
    """Gain and squeezing of the signal with its pair-creation partner."""
    system = setup.system(f_signal)
    mean = integrate_mean(system, rtol=setup.rtol, atol=setup.atol)
    corr = integrate_correlation(system, rtol=setup.rtol, atol=setup.atol)
    sq = squeeze(corr.C, 0, partner_index(system.modes))
    return {"gain_db": mean.gain_db, **sq.as_dict()}


def _sweep_worker(args):
    setup, f_signal, p2 = args
    row = {"p2_nw": None if p2 is None else p2 * 1e9, "f_signal_ghz": f_signal / 1e9}
    try:
        if p2 is not None:
            setup = setup.with_(powers_w=(setup.powers_w[0], p2))
        row.update(simulate_point(setup, f_signal))
        row["error"] = None
    except (JTWPAError, ValueError) as exc:
        row.update({"gain_db": np.nan, "s_min_db": np.nan, "s_max_db": np.nan, "purity": np.nan})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(setup: SimulationSetup, f_signals, p2_values_w=None, threads=1):
    """Grid over signal frequency and (optionally) pump-2 power.

    Rows come back in grid order (power outer, frequency inner) whatever the
    thread count; a failing point records its error and the sweep continues.
    """
    f_signals = np.atleast_1d(np.asarray(f_signals, dtype=float))
    powers = [None] if p2_values_w is None else list(np.atleast_1d(p2_values_w))
    if powers != [None] and setup.powers_w is None:
        raise ValueError("a power sweep needs powers_w and c_p in the setup")
    jobs = [(setup, float(f), None if p is None else float(p)) for p in powers for f in f_signals]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_sweep_worker, jobs))
    return [_sweep_worker(j) for j in jobs]
