"""Tau functions: routes, structure of the generator family, stable values."""

import numpy as np
import pytest

from blocktau.gradedpoly import (
    evaluate,
    gp_const,
    hirota_kdv_residual,
    schur_sequence_reduced,
)
from blocktau.symbols import covering_spec, rational_spec, time_vector
from blocktau.tau import (
    coefficient_gap,
    delta_action,
    f_family,
    kernel_facts_check,
    max_abs_coeff,
    recursion_check,
    stability_check,
    stable_tau_graded,
    tau_graded,
    tau_numeric,
    tau_series,
    tau_stable,
    tau_stable_report,
    wave_function,
    wronskian_tau,
)

RSPEC = rational_spec([0.3, 0.6])
CSPEC = covering_spec([0.3, -0.25, 0.35j], 2)
D, C = 0.3, 0.6


def _tau_closed(t1, t3):
    th_d = t1 * D + t3 * D**3
    th_c = t1 * C + t3 * C**3
    return np.cosh(th_d) * np.cosh(th_c) - (D / C) * np.sinh(th_d) * np.sinh(th_c)


# -- generator family structure ----------------------------------------------


def test_f_family_explicit_low_level():
    Q = K = 6
    ps = schur_sequence_reduced(K, Q, 2)
    ff1 = f_family(RSPEC, 1, Q)
    assert coefficient_gap(ff1.funcs[0], ps[1] - D**2 * ps[3]) < 1e-15
    assert coefficient_gap(ff1.funcs[1], gp_const(K, Q, 1.0) - C**2 * ps[2]) < 1e-15


def test_f_family_shift_symmetry():
    # f_{s,N+1} = f_{s-n,N}: raising the level shifts the column index by n
    ff1 = f_family(RSPEC, 1, 6)
    ff2 = f_family(RSPEC, 2, 6)
    for s in (3, 4):
        assert coefficient_gap(ff2.funcs[s - 1], ff1.funcs[s - 2 - 1]) < 1e-15


def test_f_family_derivative_raises_index():
    # D^n f_{s,N} = f_{s+n,N} (differentiation raises, not lowers)
    ff1 = f_family(RSPEC, 1, 6)
    ps = schur_sequence_reduced(6, 6, 2)
    d2f = ff1.funcs[0].derivative(1).derivative(1)
    f31 = -(D**2) * ps[1]
    assert coefficient_gap(d2f, f31) < 1e-15


def test_delta_action_annihilates_family():
    ff2 = f_family(RSPEC, 2, 6)
    dg = delta_action(ff2, ff2.funcs[2])
    assert max_abs_coeff(dg) < 1e-13


# -- route equality ----------------------------------------------------------


def test_triple_route_full_ring():
    routes = [
        tau_series(RSPEC, 2, 6, representation=r, gd_reduced=False).series
        for r in ("graded", "character", "wronskian")
    ]
    for i in range(3):
        for j in range(i + 1, 3):
            assert coefficient_gap(routes[i], routes[j]) < 1e-12


def test_character_route_rejects_reduced_ring():
    with pytest.raises(ValueError):
        tau_series(RSPEC, 2, 4, representation="character", gd_reduced=True)


def test_reduced_graded_vs_wronskian():
    tg = tau_graded(RSPEC, 2, 6)
    tw = wronskian_tau(f_family(RSPEC, 2, 6))
    assert coefficient_gap(tg, tw) < 1e-12


def test_wronskian_route_headroom():
    # products of derivative towers corrupt the top n*N weights under a
    # hard cap; below that the routes agree identically
    Q = 4
    tg = tau_graded(CSPEC, 2, Q + 4, gd_reduced=False)
    tw = wronskian_tau(f_family(CSPEC, 2, Q + 4, gd_reduced=False))
    assert coefficient_gap(tg, tw, upto=Q) < 1e-12


def test_numeric_equals_graded_evaluation():
    tv = time_vector((0.08, 0.0, -0.05, 0.0, 0.03))
    tau_n = tau_numeric(RSPEC, tv, 2)
    tau_g = tau_graded(RSPEC, 2, 10, K=10)
    val = evaluate(tau_g, list(tv.values) + [0.0] * 5)
    assert abs(tau_n - val) < 1e-9


def test_tau_normalization_at_zero():
    for spec in (RSPEC, CSPEC):
        tv = time_vector([0.0] * (2 * spec.n + 1))
        for N in (1, 2, 3, 4):
            assert abs(tau_numeric(spec, tv, N) - 1.0) < 1e-12


# -- stabilization -----------------------------------------------------------


def test_stabilization_both_families():
    for spec in (RSPEC, CSPEC):
        for N in (2, 3):
            rep = stability_check(spec, N, 3)
            assert rep.passed, rep.max_gap


def test_stabilization_early():
    # coefficients freeze once n*N >= Q, earlier than the sufficient N >= Q
    rep = stability_check(RSPEC, 2, 4)
    assert rep.max_gap < 1e-12


# -- stable values and solitons ----------------------------------------------


def test_two_soliton_closed_form():
    for t1, t3 in [(0.0, 0.0), (0.5, 0.5), (-0.5, 0.25), (0.3, -0.2)]:
        got = tau_stable(RSPEC, time_vector((t1, 0.0, t3)))
        want = _tau_closed(t1, t3)
        assert abs(got - want) / abs(want) < 1e-8


def test_finite_sections_approach_closed_form():
    tv = time_vector((0.3, 0.0, -0.2))
    dn = tau_numeric(RSPEC, tv, 14)
    assert abs(dn - _tau_closed(0.3, -0.2)) < 1e-9


def test_stable_report_error_estimate():
    rep = tau_stable_report(RSPEC, time_vector((0.3, 0.0, -0.2)))
    assert rep.est_error < 1e-9
    assert abs(rep.value - _tau_closed(0.3, -0.2)) < 1e-8


def test_zero_locus_on_imaginary_ray():
    # on t1 = i s the closed form degenerates to cos^3(0.3 s): a real zero
    s = np.pi / 0.6
    for frac, bound in ((0.5, 0.36), (0.9, 0.005), (0.99, 5e-6)):
        tv = time_vector((1j * s * frac, 0.0, 0.0))
        got = tau_stable(RSPEC, tv)
        want = np.cos(0.3 * s * frac) ** 3
        assert abs(got - want) < 1e-7
        assert abs(got) < bound  # marching into the zero locus


# -- kernel facts and recursion ----------------------------------------------


def test_kernel_facts_level_two():
    kf = kernel_facts_check(RSPEC, 2, 6)
    assert kf.passed, kf
    assert kf.max_residual < 1e-9


def test_recursion_level_one_to_two():
    rc = recursion_check(RSPEC, 1, 6)
    assert rc.passed, rc
    assert rc.max_residual < 1e-9


def test_recursion_level_two_to_three():
    rc = recursion_check(RSPEC, 2, 6)
    assert rc.passed, rc


# -- wave coefficients -------------------------------------------------------


def test_wave_function_leading_one_and_constants():
    ws = wave_function(RSPEC, 1, 6, 4)
    assert max_abs_coeff(ws[0] - gp_const(6, 6, 1.0)) < 1e-13
    consts = [w.constant_term() for w in ws]
    expect = [1.0, 0.0, (C**2 - D**2) / 2, 0.0, -(C**2) * D**2 / 4]
    assert max(abs(a - b) for a, b in zip(consts, expect)) < 1e-13


def test_wave_function_matches_shifted_determinant():
    # evaluating tau at t - [1/z0] through Miwa times reproduces the series
    ws = wave_function(RSPEC, 1, 6, 4)
    consts = [w.constant_term() for w in ws]
    z0 = 2.5 + 1.1j
    tv_shift = time_vector([-1.0 / (k * z0**k) for k in range(1, 49)])
    miwa = tau_numeric(RSPEC, tv_shift, 1)
    series = sum(consts[m] * z0 ** (-m) for m in range(len(consts)))
    assert abs(miwa - series) < 1e-12


def test_wave_function_rejects_negative_orders():
    with pytest.raises(ValueError):
        wave_function(RSPEC, 1, 4, -1)


# -- KdV oracle --------------------------------------------------------------


def test_stable_tau_satisfies_kdv():
    res = hirota_kdv_residual(stable_tau_graded(RSPEC, 8))
    assert max_abs_coeff(res) < 1e-8


def test_covering_stable_tau_satisfies_kdv():
    res = hirota_kdv_residual(stable_tau_graded(CSPEC, 6))
    assert max_abs_coeff(res) < 1e-8
