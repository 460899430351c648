"""Acceptance suite: the eleven headline checks, one pass/fail line each.

Each test prints a single `[criterion NN] PASS/FAIL` line with the measured
value and the tolerance it must meet (visible with `pytest -s`), then
asserts.  Tolerances are the contract: they are not tuned to the runs.
"""

import time

import numpy as np

from blocktau.gradedpoly import hirota_kdv_residual
from blocktau.laurent import geometric_mean, lm_invert, sample_function
from blocktau.symbols import (
    covering_spec,
    gd_symbol,
    gd_symbol_values,
    rational_spec,
    time_vector,
)
from blocktau.toeplitz import (
    borodin_okounkov,
    build_TN,
    det_DN,
    fredholm_det,
    plemelj_fourier,
    plemelj_quadrature,
)
from blocktau.tau import (
    coefficient_gap,
    kernel_facts_check,
    max_abs_coeff,
    recursion_check,
    stability_check,
    stable_tau_graded,
    tau_series,
    tau_stable,
)
from blocktau.factorization import (
    deformed_symbol_samples,
    tau_ratio_check,
    two_sided_factorization,
    wiener_hopf,
)
from blocktau.algebro import spectral_check

RSPEC = rational_spec([0.3, 0.6])
CSPEC = covering_spec([0.3, -0.25, 0.35j], 2)
TV = time_vector([0.2, 0.0, -0.15, 0.0, 0.08])
CTV = time_vector([0.1, 0.0, 0.05, 0.0, 0.02])


def _line(num: int, desc: str, value: float, tol: float, ok: bool, extra: str = ""):
    status = "PASS" if ok else "FAIL"
    tail = f" {extra}" if extra else ""
    print(f"[criterion {num:02d}] {status} {desc}: {value:.3e} (tol {tol:.0e}){tail}")
    assert ok, f"criterion {num:02d} {desc}: {value:.3e} exceeds {tol:.0e}{tail}"


def _random_reduced_times(spec, rng, scale):
    vals = scale * (2.0 * rng.random(2 * spec.n + 1) - 1.0)
    vals[np.arange(1, len(vals) + 1) % spec.n == 0] = 0.0
    return time_vector(vals, True)


def _fit_ratio(deltas, floor=1e-14):
    xs = [i for i, d in enumerate(deltas) if d > floor]
    ys = [np.log(deltas[i]) for i in xs]
    if len(xs) < 2:
        return 0.0
    return float(np.exp(np.polyfit(xs, ys, 1)[0]))


def test_criterion_01_two_soliton_grid_matches_closed_form():
    d, c = 0.3, 0.6
    start = time.perf_counter()
    worst = 0.0
    for t1 in np.linspace(-0.5, 0.5, 5):
        for t3 in np.linspace(-0.5, 0.5, 5):
            got = tau_stable(RSPEC, time_vector((t1, 0.0, t3)))
            th_d, th_c = t1 * d + t3 * d**3, t1 * c + t3 * c**3
            want = np.cosh(th_d) * np.cosh(th_c) - (d / c) * np.sinh(th_d) * np.sinh(
                th_c
            )
            worst = max(worst, abs(got - want) / abs(want))
    elapsed = time.perf_counter() - start
    _line(
        1,
        "two-soliton 5x5 grid, stable tau vs closed form, relative",
        worst,
        1e-6,
        worst <= 1e-6 and elapsed <= 60.0,
        f"[{elapsed:.1f}s <= 60s]",
    )


def test_criterion_02_plemelj_routes_agree_at_random_times():
    rng = np.random.default_rng(20260823)
    start = time.perf_counter()
    worst = 0.0
    for spec, scale in ((RSPEC, 0.3), (CSPEC, 0.2)):
        for _ in range(3):
            tv = _random_reduced_times(spec, rng, scale)
            lm = gd_symbol(spec, tv, (-30, 30))
            pf = plemelj_fourier(lm, lm_invert(lm), 12)
            x = deformed_symbol_samples(spec, tv, 1024)
            r_in = (1 + spec.rho) / 2
            x_inv = sample_function(
                lambda zz: np.linalg.inv(gd_symbol_values(spec, tv, zz)),
                spec.n,
                1024,
                radius=r_in,
            )
            pq = plemelj_quadrature(x, x_inv, 12)
            worst = max(worst, float(np.max(np.abs(pf.matrix - pq.matrix))))
    elapsed = time.perf_counter() - start
    _line(
        2,
        "Fourier vs quadrature operator entries, 12-block sections, 3 draws",
        worst,
        1e-8,
        worst <= 1e-8 and elapsed <= 30.0,
        f"[{elapsed:.1f}s <= 30s]",
    )


def test_criterion_03_truncations_converge_to_fredholm_determinant():
    worst_gap, worst_fit = 0.0, 0.0
    for spec, tv in ((RSPEC, TV), (CSPEC, CTV)):
        lm = gd_symbol(spec, tv, (-30, 30))
        fr = fredholm_det(plemelj_fourier(lm, lm_invert(lm), 8), tol=1e-11)
        G = geometric_mean(deformed_symbol_samples(spec, tv, 1024))
        ratios = [det_DN(build_TN(lm, N)) / G**N for N in range(1, 25)]
        gaps = [abs(r - fr.value) for r in ratios]
        deltas = [abs(b - a) for a, b in zip(ratios, ratios[1:])]
        worst_gap = max(worst_gap, gaps[-1])
        worst_fit = max(worst_fit, _fit_ratio(deltas))
    ok = worst_gap <= 1e-6 and worst_fit < 0.9
    _line(
        3,
        "determinant ratios vs operator determinant by N=24, both families",
        worst_gap,
        1e-6,
        ok,
        f"[fitted decay ratio {worst_fit:.3f} < 0.9]",
    )


def test_criterion_04_finite_section_correction_identity():
    x = deformed_symbol_samples(RSPEC, TV, 2048)
    pair = two_sided_factorization(x, B=40, tol=1e-9)
    lm = gd_symbol(RSPEC, TV, (-30, 30))
    fr = fredholm_det(plemelj_fourier(lm, lm_invert(lm), 8), tol=1e-11)
    G = geometric_mean(x)
    worst = 0.0
    for N in (1, 2, 3, 4):
        bo = borodin_okounkov(pair, N, tol=1e-12)
        lhs = det_DN(build_TN(lm, N)) / G**N
        worst = max(worst, abs(lhs - fr.value * bo.det_correction))
    _line(
        4,
        "exact finite-N correction, N=1..4, numerically produced factors",
        worst,
        1e-8,
        worst <= 1e-8,
    )


def test_criterion_05_graded_coefficients_stabilize():
    worst = 0.0
    for spec in (RSPEC, CSPEC):
        for N in (2, 3):
            rep = stability_check(spec, N, 3)
            worst = max(worst, rep.max_gap)
            assert rep.passed
    _line(
        5,
        "coefficient freeze between consecutive truncation levels, Q=3",
        worst,
        1e-12,
        worst <= 1e-12,
    )


def test_criterion_06_three_series_routes_coincide():
    routes = [
        tau_series(RSPEC, 2, 6, representation=r, gd_reduced=False).series
        for r in ("graded", "character", "wronskian")
    ]
    worst = max(
        coefficient_gap(routes[i], routes[j])
        for i in range(3)
        for j in range(i + 1, 3)
    )
    _line(
        6,
        "graded/character/Wronskian series pairwise, N=2, Q=6",
        worst,
        1e-10,
        worst <= 1e-10,
    )


def test_criterion_07_kernel_and_recursion_residuals():
    kf = kernel_facts_check(RSPEC, 2, 6)
    rc = recursion_check(RSPEC, 1, 6)
    worst = max(kf.max_residual, rc.max_residual)
    _line(
        7,
        "kernel facts and level-raising recursion, N=1->2, Q=6",
        worst,
        1e-9,
        worst <= 1e-9 and kf.passed and rc.passed,
    )


def test_criterion_08_stable_tau_satisfies_bilinear_form():
    res = hirota_kdv_residual(stable_tau_graded(RSPEC, 8))
    worst = max_abs_coeff(res)
    _line(
        8,
        "KdV bilinear residual of the stable graded tau, Q=8",
        worst,
        1e-8,
        worst <= 1e-8,
    )


def test_criterion_09_factorization_certificates_at_random_times():
    rng = np.random.default_rng(20260823)
    worst_res, worst_det = 0.0, 0.0
    for _ in range(3):
        tv = _random_reduced_times(RSPEC, rng, 0.3)
        fact = wiener_hopf(deformed_symbol_samples(RSPEC, tv, 2048), B=40, tol=1e-9)
        worst_res = max(worst_res, fact.residual)
        worst_det = max(worst_det, fact.det_plus_dev)
    worst = max(worst_res, worst_det)
    _line(
        9,
        "symbol minus product residual and unit plus-determinant, 3 draws",
        worst,
        1e-8,
        worst <= 1e-8,
        f"[residual {worst_res:.1e}, det dev {worst_det:.1e}]",
    )


def test_criterion_10_conjugated_matrix_is_polynomial():
    rep = spectral_check(CSPEC)
    ok = rep.neg_band_energy <= 1e-9 and rep.roundtrip_residual <= 1e-8
    _line(
        10,
        "negative-band energy of the conjugated matrix, elliptic covering",
        rep.neg_band_energy,
        1e-9,
        ok,
        f"[roundtrip {rep.roundtrip_residual:.1e} <= 1e-8]",
    )


def test_criterion_11_ratio_identity_small_determinant():
    worst, blocks = 0.0, []
    for N in (1, 2):
        tr = tau_ratio_check(RSPEC, TV, N)
        worst = max(worst, tr.residual)
        blocks.append(tr.block_residual)
    _line(
        11,
        "ratio of consecutive truncations as a plain block determinant, N=1,2",
        worst,
        1e-7,
        worst <= 1e-7,
        f"[single-block deviations {blocks[0]:.1e}, {blocks[1]:.1e}]",
    )
