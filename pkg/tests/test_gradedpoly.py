"""Graded ring of time polynomials: arithmetic, Schur family, characters."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blocktau.errors import DegenerateInput, SingularVandermonde
from blocktau.gradedpoly import (
    GradedPoly,
    character,
    evaluate,
    gp_const,
    gp_det,
    gp_time,
    gp_zero,
    hirota_kdv_residual,
    jacobi_trudi,
    miwa_times,
    monomial_weight,
    multinomial,
    normalize_partition,
    partitions_upto,
    sato_shift,
    schur_at_shifted_times,
    schur_sequence,
    schur_sequence_reduced,
    zero_times,
)
from blocktau.tau import coefficient_gap, max_abs_coeff, random_graded


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# -- ring axioms (property-based) --------------------------------------------


@given(st.integers(0, 10**6))
def test_ring_associativity_distributivity(seed):
    rng = _rng(seed)
    a = random_graded(5, 5, rng)
    b = random_graded(5, 5, rng)
    c = random_graded(5, 5, rng)
    assert coefficient_gap((a * b) * c, a * (b * c)) < 1e-12
    assert coefficient_gap(a * (b + c), a * b + a * c) < 1e-12
    assert coefficient_gap(a * b, b * a) < 1e-12


@given(st.integers(0, 10**6))
def test_unit_inverse_roundtrip(seed):
    rng = _rng(seed)
    a = random_graded(6, 6, rng, unit=True)
    one = gp_const(6, 6, 1.0)
    assert coefficient_gap(a * a.invert(), one) < 1e-12
    assert coefficient_gap(a.invert().invert(), a) < 1e-10


def test_truncation_is_a_ring_map():
    rng = _rng(3)
    a = random_graded(8, 8, rng)
    b = random_graded(8, 8, rng)
    lhs = (a * b).truncate(5)
    rhs = a.truncate(5) * b.truncate(5)
    assert coefficient_gap(lhs.truncate(5), rhs.truncate(5)) < 1e-13


def test_nonunit_inverse_rejected():
    p = gp_time(4, 4, 1)  # constant term 0
    with pytest.raises(DegenerateInput):
        p.invert()


def test_monomial_weight():
    assert monomial_weight((2, 0, 1)) == 2 * 1 + 1 * 3
    assert monomial_weight((0, 0, 0, 0)) == 0


# -- Schur family ------------------------------------------------------------


def test_schur_derivative_ladder():
    ps = schur_sequence(8, 8)
    for k in range(1, 9):
        for i in range(1, k + 1):
            assert coefficient_gap(ps[k].derivative(i), ps[k - i]) < 1e-14


def test_schur_generating_identity_numeric():
    # sum_k p_k(t) z^k should equal exp(sum_i t_i z^i) at a small point
    rng = _rng(11)
    tv = 0.3 * rng.normal(size=6)
    ps = schur_sequence(6, 18)
    z = 0.15
    lhs = sum(evaluate(p, tv) * z**k for k, p in enumerate(ps))
    rhs = np.exp(sum(tv[i] * z ** (i + 1) for i in range(6)))
    assert abs(lhs - rhs) < 1e-13  # tail beyond weight 18 is ~1e-15


def test_reduced_schur_drops_multiples():
    ps = schur_sequence_reduced(6, 6, 2)
    full = schur_sequence(6, 6)
    for k in range(7):
        expect = zero_times(full[k], [2, 4, 6])
        assert coefficient_gap(ps[k], expect) < 1e-14


def test_sato_shift_worked_values():
    ps = schur_sequence(4, 4)
    c0, c1, c2 = sato_shift(ps[2], 2)
    assert coefficient_gap(c0, ps[2]) < 1e-14
    assert coefficient_gap(c1, -gp_time(4, 4, 1)) < 1e-14
    assert max_abs_coeff(c2) < 1e-14


def test_sato_shift_generating_function():
    # tau(t - [1/z]) is a polynomial in 1/z of degree <= max weight, so
    # taking as many orders as the weight cap makes the identity exact
    rng = _rng(5)
    tau = random_graded(6, 6, rng)
    cs = sato_shift(tau, 6)
    z0 = 1.7 - 0.7j
    tv = 0.2 * (rng.normal(size=6) + 1j * rng.normal(size=6))
    shifted = [tv[k - 1] - 1.0 / (k * z0**k) for k in range(1, 7)]
    direct = evaluate(tau, shifted)
    series = sum(evaluate(c, tv) * z0 ** (-m) for m, c in enumerate(cs))
    assert abs(direct - series) < 1e-12


def test_schur_at_shifted_times():
    K = Q = 6
    ps = schur_sequence(K, Q)
    for k in range(4):
        rows = schur_at_shifted_times(k, K, Q)
        # entry m is the z^-m coefficient of p_k(t - [1/z]): p_k - z^-1 p_{k-1}
        assert len(rows) == 2
        assert coefficient_gap(rows[0], ps[k]) < 1e-14
        if k >= 1:
            assert coefficient_gap(rows[1], -1.0 * ps[k - 1]) < 1e-14
        else:
            assert max_abs_coeff(rows[1]) == 0.0


# -- characters and partitions -----------------------------------------------


def test_partitions_upto_counts():
    # partition numbers: 1, 1, 2, 3, 5, 7, 11 for weights 0..6
    by_weight = {}
    for lam in partitions_upto(6):
        by_weight.setdefault(sum(lam), []).append(lam)
    assert [len(by_weight.get(w, [])) for w in range(7)] == [1, 1, 2, 3, 5, 7, 11]


def test_normalize_partition():
    assert normalize_partition([3, 2, 1, 0, 0]) == (3, 2, 1)
    assert normalize_partition([]) == ()
    with pytest.raises(ValueError):
        normalize_partition([2, 3, 1])
    with pytest.raises(ValueError):
        normalize_partition([1, -2])


def test_character_vs_jacobi_trudi():
    rng = _rng(21)
    X = 0.9 * (rng.random(4) + 1j * rng.random(4) - 0.5 - 0.5j)
    tv = miwa_times(X, 6)
    for lam in partitions_upto(6):
        chi = character(lam, X)
        val = evaluate(jacobi_trudi(lam, 6, 6), tv)
        assert abs(chi - val) < 1e-10


def test_character_more_rows_than_points():
    assert character((1, 1, 1), np.array([0.5, 0.2])) == 0.0


def test_character_singular_configuration():
    with pytest.raises(SingularVandermonde):
        character((1,), np.array([0.3, 0.3]))


def test_miwa_times():
    X = np.array([0.5, -0.25])
    tv = miwa_times(X, 3)
    for k in range(1, 4):
        assert abs(tv[k - 1] - np.sum(X**k) / k) < 1e-15


# -- graded determinants -----------------------------------------------------


def test_gp_det_matches_numeric():
    # entries of weight <= 4 in a weight-12 ring: the 3x3 determinant fits
    # entirely under the cap, so evaluation commutes with the determinant
    rng = _rng(31)
    rows = [
        [GradedPoly(12, 12, random_graded(12, 4, rng).coeffs) for _ in range(3)]
        for _ in range(3)
    ]
    d = gp_det(rows)
    tv = 0.25 * rng.normal(size=12)
    num = np.linalg.det([[evaluate(e, tv) for e in row] for row in rows])
    assert abs(evaluate(d, tv) - num) < 1e-12


def test_gp_det_zero_column():
    K = Q = 3
    z = gp_zero(K, Q)
    one = gp_const(K, Q, 1.0)
    d = gp_det([[one, z], [one, z]])
    assert max_abs_coeff(d) == 0.0


def test_gp_det_nonunit_pivots():
    # Jacobi-Trudi style matrix whose diagonal has zero constant term
    ps = schur_sequence(4, 4)
    rows = [[ps[1], ps[2]], [ps[0], ps[1]]]
    d = gp_det(rows)
    expect = ps[1] * ps[1] - ps[2] * ps[0]
    assert coefficient_gap(d, expect) < 1e-14


# -- Hirota residual ---------------------------------------------------------


def test_hirota_zero_for_vacuum():
    res = hirota_kdv_residual(gp_const(8, 8, 1.0))
    assert max_abs_coeff(res) == 0.0


def test_hirota_flags_non_tau():
    # 1 + t1^2 is not a KdV tau function; the residual must be visibly nonzero
    t1 = gp_time(8, 8, 1)
    res = hirota_kdv_residual(gp_const(8, 8, 1.0) + t1 * t1)
    assert max_abs_coeff(res) > 1e-2


def test_multinomial():
    assert multinomial(2, 1) == 3
    assert multinomial(0, 0) == 1
    assert multinomial(3, 2, 1) == 60


def test_evaluate_short_time_vector():
    p = gp_time(5, 5, 4)
    assert evaluate(p, [1.0, 2.0, 3.0, 4.0, 5.0]) == 4.0


def test_graded_poly_repr_roundtrip_constant():
    p = GradedPoly(3, 3, {(0, 0, 0): 2.5})
    assert p.constant_term() == 2.5
    assert p.max_weight() == 0
