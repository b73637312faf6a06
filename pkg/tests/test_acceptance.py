"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Each ``check_N`` returns a list of ``(ok, detail)`` parts and is cached so
the composite criterion can reuse the results without recomputing them.
"""

import functools
import itertools
import math
import time
import timeit
import warnings

import numpy as np
import pytest
from conftest import record_acceptance
from oracles import oracle_levels, pump_ode_reference, table_s2_chain

from jtwpa.analysis import nu_tms, single_mode_report
from jtwpa.calibration import sntj_fit, system_noise_from_db, wqed_fit_2d
from jtwpa.circuit import insertion_loss_db, loss_per_cell_db, paper_device
from jtwpa.errors import TableRangeWarning
from jtwpa.lossmodel import LossProfile
from jtwpa.modeladder import build_modes
from jtwpa.pump import PumpState, propagate
from jtwpa.simulator import ParametricAmpSimulator
from jtwpa.solver import (
    SimulationSetup,
    gain_db,
    integrate_correlation,
    integrate_mean,
    simulate_point,
    squeeze,
    sweep,
)
from jtwpa.synthetic import sntj_curve, wqed_scan

DEVICE = paper_device()
LOSSLESS = paper_device(tan_delta=0.0)
F1, F2 = DEVICE.pump_freqs
FC = (F1 + F2) / 2
TIGHT = {"rtol": 1e-12, "atol": 1e-14}

# pump bias shared by the gain and loss criteria
P1, P2_PEAK = 1.57e-9, 0.665e-9
C_P_REF = 4.6e9
PUMP_LOSS_DB = -1.0


def saturable():
    return LossProfile(kind="saturable", pump_loss_db=PUMP_LOSS_DB, out_of_range="clamp")


def best_time(fn, number=20, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def verdict(number, parts):
    ok = all(p for p, _ in parts)
    detail = "; ".join(d for _, d in parts)
    record_acceptance(number, ok, detail)
    return ok


def within(value, target, tol):
    return abs(value - target) <= tol


# ---------------------------------------------------------------- golden chains


GOLDEN = (3.64065, 13.1258, 3.87448)
ETA, NBAR = 0.06534, 1.4e-4


@functools.cache
def check_1():
    rep = single_mode_report(*GOLDEN, ETA, NBAR)
    ref = table_s2_chain(*GOLDEN, ETA, NBAR)
    runtime = best_time(lambda: single_mode_report(*GOLDEN, ETA, NBAR))
    return [
        (within(rep["alpha_quanta_per_mv2"], 0.129052, 1e-6), f"α={rep['alpha_quanta_per_mv2']:.6f}"),
        (within(rep["dX2_min"], 0.0383, 5e-4), f"ΔX²min={rep['dX2_min']:.5f}"),
        (within(rep["dX2_max"], 18.77, 0.01), f"ΔX²max={rep['dX2_max']:.4f}"),
        (within(rep["squeeze_db"], -11.16, 0.01), f"sqz={rep['squeeze_db']:.3f} dB"),
        (within(rep["antisqueeze_db"], 15.74, 0.01), f"anti={rep['antisqueeze_db']:.3f} dB"),
        (math.isclose(rep["squeeze_db"], ref["db_min"], rel_tol=1e-12), "oracle agrees"),
        (runtime < 1e-3, f"{runtime * 1e6:.0f} µs"),
    ]


@functools.cache
def check_2():
    sn = system_noise_from_db(65.06, -109.63, 100.0, 6.7e9)
    runtime = best_time(lambda: system_noise_from_db(65.06, -109.63, 100.0, 6.7e9))
    return [
        (within(sn.t_sys, 2.46, 0.01), f"T_sys={sn.t_sys:.4f} K"),
        (within(sn.eta_meas, 0.0653, 3e-4), f"η={100 * sn.eta_meas:.3f} %"),
        (runtime < 1e-3, f"{runtime * 1e6:.0f} µs"),
    ]


@functools.cache
def check_3():
    nu = nu_tms(1.119, 1.424)
    return [(within(nu, 0.8865, 1e-4), f"ν_TMS={nu:.5f}")]


def test_criterion_1_golden_chain():
    assert verdict(1, check_1())


def test_criterion_2_noise_chain():
    assert verdict(2, check_2())


def test_criterion_3_two_mode_rescaling():
    assert verdict(3, check_3())


# ---------------------------------------------------------------- insertion loss


def test_criterion_4_insertion_loss():
    per_cell = loss_per_cell_db(6.7e9, DEVICE)
    total = insertion_loss_db(6.7e9, DEVICE)
    runtime = best_time(lambda: (loss_per_cell_db(6.7e9, DEVICE), insertion_loss_db(6.7e9, DEVICE)))
    parts = [
        (abs(per_cell / -0.00163 - 1) <= 0.15, f"per cell {per_cell:.6f} dB"),
        (within(total, -5.1, 0.8), f"total {total:.3f} dB"),
        (runtime < 1e-2, f"{runtime * 1e6:.0f} µs"),
    ]
    assert verdict(4, parts)


# ---------------------------------------------------------------- mode ladder


def test_criterion_5_mode_ladder():
    rng = np.random.default_rng(2024)
    mismatches, n = 0, 0
    while n < 100:
        # whole-MHz grid keeps the set comparison exact
        o1 = float(rng.integers(3000, 6000)) * 1e6
        o2 = o1 + float(rng.integers(500, 4000)) * 1e6
        w0 = float(rng.integers(1000, 12000)) * 1e6
        if abs(w0 - o1) < 1e6 or abs(w0 - o2) < 1e6:
            continue
        n += 1
        m = build_modes(w0, (o1, o2), depth=1)
        k0, k1 = oracle_levels(w0, o1, o2)
        got0 = {int(f) for f in m.levels[0]}
        got1 = {int(f) for f in m.levels[1]}
        if got0 != {int(f) for f in k0} or got1 != {int(f) for f in k1} or len(m.levels[1]) != len(k1):
            mismatches += 1
    assert verdict(5, [(mismatches == 0, f"{n - mismatches}/{n} random pump/signal triples exact")])


# ---------------------------------------------------------------- solver physics


@functools.cache
def check_6():
    t0 = time.perf_counter()
    parts = []
    worst_symp = 0.0
    for f in (6.5e9, FC):
        for depth in (0, 1):
            s = SimulationSetup(params=LOSSLESS, betas=(0.14, 0.14), depth=depth).system(f)
            S = integrate_mean(s).S
            worst_symp = max(worst_symp, float(np.max(np.abs(S @ s.K @ S.conj().T - s.K))))
    parts.append((worst_symp < 1e-8, f"‖SKS†−K‖∞={worst_symp:.1e}"))

    s = SimulationSetup(params=LOSSLESS, betas=(0.14, 0.14)).system(6.5e9)
    corr = integrate_correlation(s, checkpoints=np.linspace(0, s.length, 100), **TIGHT)
    n = s.n
    comm = max(float(np.max(np.abs(C[:n, n:] - C[n:, :n].T - np.eye(n)))) for C in corr.history)
    parts.append((comm < 1e-8 and len(corr.history) >= 100, f"commutation {comm:.1e} at {len(corr.history)} points"))

    sq = squeeze(corr.C, 0, 1)
    parts.append((abs(sq.purity - 1) <= 1e-6, f"purity−1={sq.purity - 1:.1e}"))
    parts.append((abs(sq.s_min_db + sq.s_max_db) <= 1e-4, f"s_min+s_max={sq.s_min_db + sq.s_max_db:.1e} dB"))

    # phase-matched two-mode limit: mismatch removed, constant coupling
    worst_cosh = 0.0
    for b1, b2 in ((0.1, 0.1), (0.14, 0.12), (0.2, 0.08)):
        s = SimulationSetup(params=LOSSLESS, betas=(b1, b2)).system(6.5e9)
        s._coeffs[:] = 0.0
        lam = 2 * b1 * b2 * math.sqrt(s._k[0] * s._k[1])
        G = integrate_mean(s).G
        worst_cosh = max(worst_cosh, abs(G / math.cosh(lam * s.length) ** 2 - 1))
    parts.append((worst_cosh < 1e-6, f"cosh² oracle rel err {worst_cosh:.1e}"))
    elapsed = time.perf_counter() - t0
    parts.append((elapsed < 30, f"{elapsed:.1f} s"))
    return parts


def test_criterion_6_solver_physics():
    assert verdict(6, check_6())


# ---------------------------------------------------------------- pump propagation


def test_criterion_7_pump_closed_form_vs_ode():
    z = DEVICE.n_cells
    k1, k2 = 0.0561, 0.0917
    worst = 0.0
    for b in np.linspace(0.02, 0.24, 10):
        for g in np.linspace(0.0, 2 * 5 * math.log(10) / 10 / z, 10):
            st = (PumpState(F1, b, k1, g), PumpState(F2, 0.7 * b, k2, 1.3 * g))
            c1, c2 = propagate(st, z)
            r1, r2 = pump_ode_reference(b, 0.7 * b, g, 1.3 * g, k1, k2, z)
            worst = max(worst, abs(c1 - r1) / abs(r1), abs(c2 - r2) / abs(r2))
    assert verdict(7, [(worst < 1e-9, f"worst relative deviation {worst:.1e} on 10×10 (β, γ)")])


# ---------------------------------------------------------------- gain reproduction

GUARD = 50e6  # kept clear of each pump
STEP = 50e6


def smooth_mask(gains, floor_db=0.1):
    """True where the discrete curvature is explained by the local slope.

    An isolated spike gives ``|G[i+1] - 2G[i] + G[i-1]|`` equal to the sum of
    the adjacent steps; a smooth curve sampled finely gives much less.
    """
    g = np.asarray(gains, dtype=float)
    ok = np.isfinite(g)
    d1 = np.diff(g)
    d2 = np.abs(np.diff(g, 2))
    ok[1:-1] &= d2 <= 0.5 * (np.abs(d1[:-1]) + np.abs(d1[1:])) + floor_db
    return ok


@functools.cache
def check_8():
    parts = []
    # c_p from a noisy synthetic gain-versus-P2 curve; the device data are not published
    truth = ParametricAmpSimulator(params=DEVICE, loss=saturable(), p1=P1, c_p=C_P_REF)
    p2 = np.array([0.55e-9, 0.6e-9, P2_PEAK])
    rng = np.random.default_rng(0)
    y = np.array([truth.gain_at_power(C_P_REF, p) for p in p2]) + rng.normal(0, 0.05, p2.size)
    fitted = truth.set_params(c_p=0.9 * C_P_REF).fit(p2, y)
    c_p = fitted.c_p_
    parts.append((abs(c_p / C_P_REF - 1) < 0.01, f"fitted c_p={c_p:.5g}/W"))

    setup = SimulationSetup(params=DEVICE, loss=saturable(), powers_w=(P1, P2_PEAK), c_p=(c_p, c_p))
    betas = [abs(p.beta0) for p in setup.pump_states()]
    g_center = gain_db(setup, FC + 1e6)
    parts.append((g_center >= 20 and max(betas) < 0.25, f"G(ω_c)={g_center:.2f} dB at |β|=({betas[0]:.3f}, {betas[1]:.3f})"))

    # between the pumps, offset so no grid point is the degenerate one
    fs = np.arange(F1 + GUARD, F2 - GUARD + 1, STEP) + 1e6
    rows = sweep(setup, fs)
    gains = np.array([r["gain_db"] for r in rows])
    ok = smooth_mask(gains) & np.array([r["error"] is None for r in rows])
    parts.append((bool(ok.all()), f"smooth on {fs[0] / 1e9:.3f}-{fs[-1] / 1e9:.3f} GHz ({ok.sum()}/{ok.size})"))
    span = fs[-1] - fs[0] if ok.all() else 0.0

    central = np.abs(fs - FC) <= 0.5e9
    peak = float(gains[central].max())
    single = []
    for powers in ((P1, 0.0), (0.0, P2_PEAK)):
        one = setup.with_(powers_w=powers, depth=1)
        single.append(max(gain_db(one, f) for f in fs[central][::2]))
    worst_single = max(single)
    parts.append((worst_single <= peak - 10, f"single-pump DFWM max {worst_single:.2f} dB vs dual peak {peak:.2f} dB"))
    return parts, span


def test_criterion_8_gain_reproduction():
    parts, span = check_8()
    span_part = (span >= 3e9, f"smooth span {span / 1e9:.2f} GHz (pumps {(F2 - F1) / 1e9:.3f} GHz apart)")
    verdict(8, [*parts, span_part])
    assert all(p for p, _ in parts)


@pytest.mark.xfail(strict=True, reason="the pumps are 2.81 GHz apart, so no 3 GHz band fits between them")
def test_criterion_8_span_between_pumps():
    _, span = check_8()
    assert span >= 3e9


# ---------------------------------------------------------------- loss bracket

SCHEDULE = np.array([0.1, 0.2, 0.3, 0.5, 0.65, 0.7]) * 1e-9


def loss_models():
    return {
        "lossless": LossProfile(kind="distributed", total_db=0.0, pump_loss_db=PUMP_LOSS_DB),
        "dist-1": LossProfile(kind="distributed", total_db=-1.0, pump_loss_db=PUMP_LOSS_DB),
        "dist-5": LossProfile(kind="distributed", total_db=-5.0, pump_loss_db=PUMP_LOSS_DB),
        "lumped-5": LossProfile(kind="lumped_at_end", total_db=-5.0, pump_loss_db=PUMP_LOSS_DB),
        "saturable": saturable(),
    }


@functools.cache
def check_9():
    c_p = C_P_REF
    table = {}
    for name, loss in loss_models().items():
        base = SimulationSetup(params=DEVICE, loss=loss, powers_w=(P1, P2_PEAK), c_p=(c_p, c_p))
        rows = [simulate_point(base.with_(powers_w=(P1, p)), FC + 1e3) for p in SCHEDULE]
        table[name] = (np.array([r["s_min_db"] for r in rows]), np.array([r["gain_db"] for r in rows]))
    best = {k: float(-v[0].min()) for k, v in table.items()}
    order = ["lumped-5", "dist-5", "dist-1", "lossless"]
    chain = all(best[a] <= best[b] for a, b in itertools.pairwise(order))
    parts = [(chain, "achieved |s_min| " + " ≤ ".join(f"{k} {best[k]:.2f}" for k in order))]

    sat, d5, d1 = table["saturable"][0], table["dist-5"][0], table["dist-1"][0]
    low = all(abs(sat[i] - d5[i]) < abs(sat[i] - d1[i]) for i in (0, 1))
    parts.append((low, f"low P2: sat {sat[1]:.2f} vs dist-5 {d5[1]:.2f} / dist-1 {d1[1]:.2f} dB"))
    top = int(np.argmax(table["saturable"][1]))
    parts.append((abs(sat[top] - d1[top]) <= 2.0, f"gain max (P2={SCHEDULE[top] * 1e9:.3g} nW): sat {sat[top]:.2f} vs dist-1 {d1[top]:.2f} dB"))
    at_top = [-table[k][0][top] for k in order]
    parts.append((all(a <= b for a, b in itertools.pairwise(at_top)), "ordering also holds at the gain maximum"))
    return parts


def test_criterion_9_loss_bracket():
    assert verdict(9, check_9())


# ---------------------------------------------------------------- degenerate limit


@functools.cache
def check_10():
    parts = []
    setups = {
        "lossless": SimulationSetup(params=LOSSLESS, betas=(0.14, 0.14)),
        "saturable": SimulationSetup(params=DEVICE, loss=saturable(), powers_w=(P1, P2_PEAK), c_p=(C_P_REF, C_P_REF)),
    }
    for name, s in setups.items():
        single = simulate_point(s, FC)
        # signal and idler 1 kHz apart
        pair = simulate_point(s, FC + 500.0)
        diff = abs(single["s_min_db"] - pair["s_min_db"])
        parts.append((diff <= 0.05, f"{name}: {single['s_min_db']:.3f} vs {pair['s_min_db']:.3f} dB"))
    return parts


def test_criterion_10_degenerate_continuity():
    assert verdict(10, check_10())


# ---------------------------------------------------------------- calibration fits

V = np.linspace(-300e-6, 300e-6, 121)
F_CAL = 6.7e9


def test_criterion_11_calibration_recovery():
    parts = []
    t0 = time.perf_counter()
    r = sntj_fit(V, sntj_curve(V, 0.030, 2.5, 1e6, 100.0, F_CAL, rel_noise=0.01, seed=0), F_CAL, 100.0)
    t_sntj = time.perf_counter() - t0
    parts.append((abs(r.t_noise / 2.5 - 1) <= 0.02 and t_sntj < 5, f"SNTJ T_N={r.t_noise:.4f} K ({t_sntj:.2f} s)"))

    # σ(T_N) is about 0.9 % at this noise, so 2 % is roughly a 2σ bound
    hits = np.mean(
        [abs(sntj_fit(V, sntj_curve(V, 0.030, 2.5, 1e6, 100.0, F_CAL, rel_noise=0.01, seed=s), F_CAL, 100.0).t_noise / 2.5 - 1) <= 0.02 for s in range(1, 51)]
    )
    parts.append((hits >= 0.9, f"SNTJ within 2 % for {100 * hits:.0f} % of 50 seeds"))

    omegas = [3e4, 1e5, 3e5, 1e6, 3e6, 1e7]
    det = np.linspace(-5e6, 5e6, 201)
    t0 = time.perf_counter()
    w = wqed_fit_2d(*wqed_scan(det, omegas, 1e6, 0.6e6, noise=0.01, seed=0))
    t_wqed = time.perf_counter() - t0
    ok = abs(w.gamma1 / 1e6 - 1) <= 0.02 and abs(w.gamma2 / 0.6e6 - 1) <= 0.02 and t_wqed < 5
    parts.append((ok, f"wQED Γ1={w.gamma1:.4g}, Γ2={w.gamma2:.4g} ({t_wqed:.2f} s)"))
    wins = np.mean(
        [
            abs(f.gamma1 / 1e6 - 1) <= 0.02 and abs(f.gamma2 / 0.6e6 - 1) <= 0.02
            for f in (wqed_fit_2d(*wqed_scan(det, omegas, 1e6, 0.6e6, noise=0.01, seed=s)) for s in range(1, 21))
        ]
    )
    parts.append((wins >= 0.9, f"wQED within 2 % for {100 * wins:.0f} % of 20 seeds"))
    assert verdict(11, parts)


# ---------------------------------------------------------------- composite


def test_criterion_12_headline_numbers_via_properties():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TableRangeWarning)
        groups = {"1": check_1(), "2": check_2(), "3": check_3(), "6": check_6(), "9": check_9(), "10": check_10()}
    status = {k: all(p for p, _ in v) for k, v in groups.items()}
    detail = "golden " + ", ".join(f"{k}:{'ok' if v else 'fail'}" for k, v in status.items())
    assert verdict(12, [(all(status.values()), detail)])
