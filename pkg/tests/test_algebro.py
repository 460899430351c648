"""Spectral curves: branch series, commuting pair, symbol reconstruction."""

import numpy as np
import pytest

from blocktau.errors import BranchMatchError, SpecError
from blocktau.laurent import LaurentMatrix, ScalarSeries, lm_mul
from blocktau.symbols import base_symbol, covering_spec, lambda_power
from blocktau.algebro import (
    bc_matrices,
    branch_series,
    charpoly,
    charpoly_from_matrix,
    curve_from_covering,
    fold_scalar,
    reconstruct_W,
    spectral_check,
)

CSPEC = covering_spec([0.3, -0.25, 0.35j], 2)


@pytest.fixture(scope="module")
def covering_curve():
    cp = curve_from_covering(CSPEC)
    bs = branch_series(cp, 96)
    return cp, bs


# -- branch series -----------------------------------------------------------


def test_monomial_curve_branch_is_exact_power():
    cp = charpoly(2, [np.zeros(1), np.array([0, 0, 0, -1.0])])
    bs = branch_series(cp, 40)
    assert bs.m == 3
    assert float(np.max(np.abs(bs.tail))) == 0.0
    assert bs.residual_unit_circle < 1e-12


def test_square_root_series_binomial_oracle():
    # lambda^2 = z^3 + z^2: tail coefficients are the binomial (1/2 choose i)
    cp = charpoly(2, [np.zeros(1), np.array([0, 0, -1.0, -1.0])])
    bs = branch_series(cp, 60)
    want = np.zeros(61)
    b = 1.0
    for i in range(31):
        if 2 * i > 0:
            want[2 * i] = b
        b *= (0.5 - i) / (i + 1.0)
    assert float(np.max(np.abs(bs.tail - want[1:]))) < 1e-13


def test_covering_branch_matches_sampled_root(covering_curve):
    _cp, bs = covering_curve
    zeta = np.exp(2j * np.pi * (np.arange(64) + 0.21) / 64)
    logs = sum(np.log1p(-a / zeta**2) for a in CSPEC.params)
    direct = zeta**3 * np.exp(0.5 * logs)
    assert float(np.max(np.abs(bs(zeta) - direct))) < 1e-12
    assert bs.residual_unit_circle < 1e-10


def test_oncircle_branch_point_residual_recorded_not_raised():
    # z = -1 is a branch point sitting on the unit circle, so the truncated
    # series cannot close the curve equation there; the residual is stored
    # for the caller to judge rather than raised
    cp = charpoly(2, [np.zeros(1), np.array([0, 0, -1.0, -1.0])])
    bs = branch_series(cp, 60)
    assert np.isfinite(bs.residual_unit_circle)
    assert bs.residual_unit_circle > 1e-8


# -- folding -----------------------------------------------------------------


def test_fold_matches_shift_powers():
    for k in range(-3, 5):
        f = fold_scalar(ScalarSeries(k, [1.0]), 2)
        lp = lambda_power(2, k)
        for q in range(min(f.lo, lp.lo), max(f.hi, lp.hi) + 1):
            fb = f.block(q) if f.lo <= q <= f.hi else np.zeros((2, 2))
            lb = lp.block(q) if lp.lo <= q <= lp.hi else np.zeros((2, 2))
            assert np.max(np.abs(fb - lb)) == 0.0


def test_fold_square_is_z_identity():
    f2 = fold_scalar(ScalarSeries(2, [1.0]), 2)
    assert f2.lo == 1 and f2.hi == 1
    assert np.allclose(f2.block(1), np.eye(2))


def test_fold_multiplicative():
    rng = np.random.default_rng(5)
    a = ScalarSeries(-2, rng.normal(size=5) + 1j * rng.normal(size=5))
    b = ScalarSeries(-1, rng.normal(size=4) + 1j * rng.normal(size=4))
    conv = np.convolve(a.coeffs, b.coeffs)
    ab = ScalarSeries(a.lo + b.lo, conv)
    from blocktau.laurent import lm_mul

    fa, fb = fold_scalar(a, 3), fold_scalar(b, 3)
    fab = fold_scalar(ab, 3)
    prod = lm_mul(fa, fb, (fab.lo, fab.hi))
    worst = max(
        float(np.max(np.abs(prod.block(q) - fab.block(q))))
        for q in range(fab.lo, fab.hi + 1)
    )
    assert worst < 1e-12


def _blk(lm, q):
    return lm.block(q) if lm.lo <= q <= lm.hi else np.zeros((lm.n, lm.n), dtype=complex)


# -- commuting pair ----------------------------------------------------------


def test_conjugated_matrix_closed_form(covering_curve):
    _cp, bs = covering_curve
    bc = bc_matrices(CSPEC, bs)
    a0, a1, a2 = CSPEC.params
    expect = {
        0: np.array([[0, a1 * a2], [-a0, 0]], dtype=complex),
        1: np.array([[0, -(a1 + a2)], [1, 0]], dtype=complex),
        2: np.array([[0, 1], [0, 0]], dtype=complex),
    }
    worst = 0.0
    for q in range(bc.C.lo, bc.C.hi + 1):
        want = expect.get(q, np.zeros((2, 2)))
        worst = max(worst, float(np.max(np.abs(bc.C.block(q) - want))))
    assert worst < 1e-9
    assert bc.neg_band_energy < 1e-12
    assert bc.trace_deviation < 1e-12
    assert bc.degree_pattern == 3
    assert bc.curve_deviation < 1e-10


def test_charpoly_roundtrip_from_matrix(covering_curve):
    cp, bs = covering_curve
    bc = bc_matrices(CSPEC, bs)
    cp_back = charpoly_from_matrix(bc.C)
    assert cp_back.m == 3
    assert np.allclose(cp_back.c(2), cp.c(2), atol=1e-9)


def test_reconstruction_recovers_base_symbol(covering_curve):
    _cp, bs = covering_curve
    bc = bc_matrices(CSPEC, bs)
    w_rec = reconstruct_W(bc.C, 96)
    w_true = base_symbol(CSPEC, (w_rec.lo, 0))
    worst = max(
        float(np.max(np.abs(_blk(w_rec, q) - _blk(w_true, q))))
        for q in range(min(w_rec.lo, w_true.lo), 1)
    )
    assert worst < 1e-8


def test_spectral_report_passes():
    rep = spectral_check(CSPEC)
    assert rep.passed, "\n".join(rep.lines())
    assert rep.roundtrip_residual < 1e-8
    assert rep.symbol_residual < 1e-8
    assert rep.match_stable
    assert rep.big_cell_ok


def test_spectral_report_second_elliptic_curve():
    spec = covering_spec([0.2, 0.4j, -0.35], 2)
    rep = spectral_check(spec)
    assert rep.passed, "\n".join(rep.lines())


# -- negative controls -------------------------------------------------------


def test_reject_constant_curve():
    with pytest.raises(SpecError):
        charpoly(2, [np.zeros(1), np.array([10.0])])


def test_reject_degree_bound_violation():
    with pytest.raises(SpecError):
        charpoly(2, [np.array([0, 0, 1.0]), np.array([0, 0, 0, -1.0])])


def test_reject_non_coprime_orders():
    with pytest.raises(SpecError):
        charpoly(2, [np.zeros(1), np.array([0, 0, 0, 0, -1.0])])


def test_reject_matrix_without_curve_structure():
    diag = LaurentMatrix(2, 0, 0, np.array([[[2.0, 0], [0, 5.0]]], dtype=complex))
    with pytest.raises(SpecError):
        charpoly_from_matrix(diag)


def test_branch_match_ambiguity_detected():
    from blocktau.algebro import _match_branches

    # clean separation: each expected branch claims its nearest eigenvalue
    pick = _match_branches(
        np.array([[-1.02 + 0j, 1.01 + 0j]]), np.array([[1.0 + 0j, -1.0 + 0j]])
    )
    assert pick.tolist() == [[1, 0]]

    # coincident eigenvalues leave nothing to separate: must be flagged
    with pytest.raises(BranchMatchError):
        _match_branches(
            np.array([[1.0 + 0j, 1.0 + 0j]]), np.array([[1.0 + 0j, 1.0 + 0j]])
        )
