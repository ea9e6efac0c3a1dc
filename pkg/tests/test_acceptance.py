"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line before asserting, so the summary
is visible in a plain ``pytest -v`` log.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from tempim.circuit import (
    PAULI_X,
    CircuitParams,
    build_obc_im,
    build_pd_im,
    build_transfer_mpo,
    x_polarized,
)
from tempim.engine import iterate_im, lcga_build, project_time
from tempim.mps import TemporalMPS, apply_mpo, fidelity, from_dense
from tempim.observables import autocorrelator_series, evaluate_sandwich, polarization_series
from tempim.oracle import (
    exact_autocorrelator,
    exact_im,
    exact_polarization,
    free_fermion_phases,
    parity_sector_phases,
    spectrum_distance,
)
from tempim.quasiparticle import LN2, PairWeight, kic_dispersion, s_curve, self_dual_s, v_te
from tempim.tebd import tebd_autocorr, tebd_autocorr_run, tebd_quench, tebd_quench_run

from .conftest import G, H, J

CHI = 128
ROUNDOFF = 1e-12


@pytest.fixture
def report(capsys):
    def _report(label: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return _report


@pytest.fixture(scope="module")
def lcga_infinite():
    """Infinite-temperature LCGA at chi = 128 up to T = 15 (each ims[T] is final once built)."""
    t0 = time.perf_counter()
    ims, trace = lcga_build(CircuitParams(G, J, H, 15), 15, CHI)
    return ims, trace, time.perf_counter() - t0


def test_criterion_1_oracle_equivalence(report):
    t0 = time.perf_counter()
    worst = 1.0
    for T in (2, 3):
        p = CircuitParams(G, J, H, T)
        for L in (2, 4, 6):
            ref = from_dense(exact_im(p, L), 2 * T, 4)
            im, _ = iterate_im(build_obc_im(T), p, L // 2, stop_when_converged=False)
            worst = min(worst, fidelity(im, ref))
            if L == 2 * T:
                ims, _ = lcga_build(p, T)
                worst = min(worst, fidelity(ims[T], ref))
        # the infinite-chain IM is reached once the environment covers the light cone
        ims, _ = lcga_build(p, T)
        worst = min(worst, fidelity(ims[T], from_dense(exact_im(p, 2 * T), 2 * T, 4)))
    dt = time.perf_counter() - t0
    report("criterion 1", worst >= 1 - 1e-10 and dt < 60, f"min fidelity {worst:.15f}, {dt:.1f}s")


@pytest.mark.slow
def test_criterion_2_lcga_monotonicity(report, lcga_infinite):
    ims, trace, build_time = lcga_infinite
    t0 = time.perf_counter()
    recs = trace.records[:12]
    s = [r.mid_entropy for r in recs]
    bonds = [r.max_bond for r in recs]
    mono = all(b >= a for a, b in zip(s, s[1:])) and all(b >= a for a, b in zip(bonds, bonds[1:]))
    proj_ok = True
    worst_gap = 0.0
    for T in range(1, 12):
        f = fidelity(project_time(ims[T + 1], 1), ims[T])
        # a fidelity evaluated in double precision cannot certify an exact bound of 1
        bound = 1 - 10 * recs[T].discarded_weight - ROUNDOFF
        worst_gap = max(worst_gap, (1 - f) - 10 * recs[T].discarded_weight)
        proj_ok &= f >= bound
    # the shared build runs to T = 15; count only the share up to T = 12 against the budget
    dt = time.perf_counter() - t0 + build_time
    detail = f"S_mid {np.round(s, 4).tolist()}, chi {bonds}, projection slack {worst_gap:.2e}, {dt:.0f}s"
    report("criterion 2", mono and proj_ok and dt < 600, detail)


def _teb_traces(T: int):
    p = CircuitParams(G, J, H, T)
    _, obc = iterate_im(build_obc_im(T), p, 2 * T, CHI)
    _, pd = iterate_im(build_pd_im(T), p, 2 * T, CHI)
    _, lc = lcga_build(p, T, CHI)
    return obc.mid_entropies, pd.mid_entropies, lc.mid_entropies


def _teb_verdict(obc, pd, lc):
    plateau = obc[-1]
    peak_ratio = max(obc) / plateau
    lcga_ok = abs(max(lc) - lc[-1]) <= 1e-12
    ordering = max(lc) < max(pd) < max(obc)
    detail = (
        f"OBC peak/plateau {max(obc):.4f}/{plateau:.4f} = {peak_ratio:.2f}, "
        f"LCGA max-final {max(lc) - lc[-1]:.1e}, peaks LCGA {max(lc):.4f} PD {max(pd):.4f} OBC {max(obc):.4f}"
    )
    return peak_ratio >= 1.5 and lcga_ok and ordering, detail


@pytest.mark.slow
def test_criterion_3_teb_reproduction(report):
    ok, detail = _teb_verdict(*_teb_traces(8))
    report("criterion 3", ok, f"T=8: {detail}")


@pytest.mark.slow
def test_teb_shape_at_longer_time(report):
    # supplementary: the same qualitative test once T exceeds the transient of the OBC iteration
    ok, detail = _teb_verdict(*_teb_traces(12))
    report("criterion 3 (supplementary, T=12)", ok, f"T=12: {detail}")


def test_criterion_4_self_dual_closed_form(report):
    t0 = time.perf_counter()
    d = kic_dispersion(np.pi / 4, np.pi / 4)
    w = PairWeight(LN2)
    xi = np.linspace(0.0, 0.6, 100)
    s = np.array([v for _, v in s_curve(d, w, xi)])
    err = float(np.max(np.abs(s - self_dual_s(xi))))
    small = 1e-6
    slope = s_curve(d, w, [small])[0][1] / small
    vt = v_te(d, w)
    dt = time.perf_counter() - t0
    ok = err <= 1e-6 and abs(slope - vt) <= 1e-4 and dt < 1.0
    report("criterion 4", ok, f"max |s - closed form| {err:.1e}, slope {slope:.6f} vs v_te {vt:.6f}, {dt:.2f}s")


@pytest.mark.slow
def test_criterion_5_barrier_shape(report):
    g, j = np.pi / 4, 0.6 * np.pi / 4
    d = kic_dispersion(g, j)
    w = PairWeight(0.93 * LN2)
    xi = np.linspace(0.0, 0.6, 121)
    step = xi[1] - xi[0]
    s = np.array([v for _, v in s_curve(d, w, xi)])
    nonneg = bool(np.all(s >= 0))
    i_peak = int(np.argmax(s))
    unimodal = bool(np.all(np.diff(s[: i_peak + 1]) >= -1e-14) and np.all(np.diff(s[i_peak:]) <= 1e-14))
    vanish = bool(np.all(s[xi >= 0.5] <= 1e-14))
    # a flat-velocity band peaks at xi = 1/4; dispersion moves the peak to the left
    left = xi[i_peak] <= 0.25 + step
    n = 12
    sectors = parity_sector_phases(g, j, n)
    k_even = 2 * np.pi * (np.arange(n) + 0.5) / n
    k_odd = 2 * np.pi * np.arange(n) / n
    dist = max(
        spectrum_distance(sectors[1], free_fermion_phases(d.omega_at(k_even), 1)),
        min(spectrum_distance(sectors[-1], free_fermion_phases(d.omega_at(k_odd), par)) for par in (1, -1)),
    )
    ok = nonneg and unimodal and vanish and left and dist <= 1e-8
    detail = (
        f"nonneg {nonneg}, unimodal {unimodal}, zero beyond 1/2 {vanish}, peak at xi={xi[i_peak]:.3f}, "
        f"spectrum distance {dist:.1e}"
    )
    report("criterion 5", ok, detail)


def _pairwise(a, b, upto):
    return max(abs(x - y) for (_, x), (_, y) in zip(a[: upto + 1], b[: upto + 1]))


@pytest.mark.slow
def test_criterion_6_dynamics_cross_validation(report, lcga_infinite):
    t0 = time.perf_counter()
    px = CircuitParams(G, J, H, 3, x_polarized())
    pinf = CircuitParams(G, J, H, 3)
    ims_x, _ = lcga_build(px, 3)
    ims_i, _ = lcga_build(pinf, 3)
    quench = {
        "lcga": polarization_series(ims_x, px, "X"),
        "tebd": tebd_quench(px, 10, None, 3),
        "ed": [(t, v.real) for t, v in exact_polarization(px, 11, PAULI_X)],
    }
    auto = {
        "lcga": autocorrelator_series(ims_i, pinf, "X"),
        "tebd": tebd_autocorr(pinf, 10, None, 3),
        "ed": [(t, v.real) for t, v in exact_autocorrelator(pinf, 9, PAULI_X)],
    }
    exact_gap = max(_pairwise(s[a], s[b], 3) for s in (quench, auto) for a, b in (("lcga", "tebd"), ("lcga", "ed"), ("tebd", "ed")))

    T = 15
    L = 2 * T + 4
    p15x = CircuitParams(G, J, H, T, x_polarized())
    ims15x, _ = lcga_build(p15x, T, CHI)
    lx = polarization_series(ims15x, p15x, "X")
    tx = tebd_quench_run(p15x, L, CHI, T)
    ims15i, _, _ = lcga_infinite
    li = autocorrelator_series(ims15i, CircuitParams(G, J, H, T))
    ti = tebd_autocorr_run(CircuitParams(G, J, H, T), L, CHI, T)

    def gap(lc, tb):
        d = [abs(a - b) for (_, a), (_, b), w in zip(lc, tb.series, tb.discarded) if w < 1e-6]
        return max(d), len(d) - 1

    gx, tmax_x = gap(lx, tx)
    gi, tmax_i = gap(li, ti)
    dt = time.perf_counter() - t0
    ok = exact_gap <= 1e-8 and gx <= 1e-4 and gi <= 1e-4 and dt < 1200
    detail = (
        f"untruncated t<=3 gap {exact_gap:.1e}; chi=128 gap quench {gx:.1e} (t<={tmax_x}), "
        f"autocorr {gi:.1e} (t<={tmax_i}) where TEBD discarded < 1e-6, {dt:.0f}s"
    )
    report("criterion 6", ok, detail)


def test_criterion_7_trace_preservation(report):
    worst = 0.0
    points = [(G, J, H), (np.pi / 4, np.pi / 4, 0.2), (0.3, -0.7, 0.5), (0.0, 0.0, 0.0), (1.2, 0.1, -0.4)]
    for g, j, h in points:
        for rho0 in (None, x_polarized(), np.diag([1.0, 0.0])):
            for T in (1, 2, 3):
                p = CircuitParams(g, j, h, T, rho0)
                for L in (0, 2, 4):
                    im = from_dense(exact_im(p, L), 2 * T, 4)
                    worst = max(worst, abs(evaluate_sandwich(im, im, p) - 1))
    ims, _ = lcga_build(CircuitParams(G, J, H, 2), 2)
    c0 = autocorrelator_series(ims, CircuitParams(G, J, H, 2), "X")[0][1]
    report("criterion 7", worst <= 1e-12 and c0 == 1.0, f"max |Z - 1| {worst:.1e}, C(0) = {c0!r}")


def test_criterion_8_perfect_dephaser_fixed_point(report):
    fids = []
    for T in (1, 2, 3, 4):
        p = CircuitParams(np.pi / 4, np.pi / 4, 0.2, T)
        pd = build_pd_im(T)
        fids.append(fidelity(apply_mpo(build_transfer_mpo(p), pd), pd))
    ok = min(fids) >= 1 - 1e-10
    report("criterion 8", ok, f"fidelity T=1..4: {[round(f, 12) for f in fids]}")


def _z_dephaser(T: int) -> TemporalMPS:
    a = np.zeros((1, 4, 2), dtype=complex)
    b = np.zeros((2, 4, 1), dtype=complex)
    a[0, 0, 0] = a[0, 3, 1] = 1.0
    b[0, 0, 0] = b[1, 3, 0] = 1.0
    return TemporalMPS(tuple(x for _ in range(T) for x in (a, b)))


def test_self_dual_fixed_point_is_z_dephaser(report):
    # supplementary: the transfer matrix at the self-dual point maps any IM onto the Z-diagonal wire
    fids = []
    for T in (1, 2, 3, 4):
        for rho0 in (None, x_polarized()):
            p = CircuitParams(np.pi / 4, np.pi / 4, 0.2, T, rho0)
            o = build_transfer_mpo(p)
            zd = _z_dephaser(T)
            fids.append(fidelity(apply_mpo(o, zd), zd))
            fids.append(fidelity(apply_mpo(o, build_pd_im(T)), zd))
    ok = min(fids) >= 1 - 1e-10
    report("criterion 8 (supplementary, Z-dephaser)", ok, f"min fidelity {min(fids):.15f}")
