"""Block Toeplitz truncations, Plemelj operators, determinant limit theorems."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blocktau.errors import HypothesisError
from blocktau.laurent import (
    LaurentMatrix,
    inverse_transform,
    lm_invert,
    sample_function,
)
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
    half_truncated_shortcut,
    hankel_identity_check,
    plemelj_fourier,
    plemelj_quadrature,
    szego_widom,
    widom_derivative_check,
)
from blocktau.factorization import deformed_symbol_samples, two_sided_factorization

RSPEC = rational_spec([0.3, 0.6])
CSPEC = covering_spec([0.3, -0.25, 0.35j], 2)
TV = time_vector([0.2, 0.0, -0.15, 0.0, 0.08])


def _plemelj_pair(spec, tv, blocks, M=1024):
    lm = gd_symbol(spec, tv, (-30, 30))
    pf = plemelj_fourier(lm, lm_invert(lm), blocks)
    x = deformed_symbol_samples(spec, tv, M)
    r_in = (1 + spec.rho) / 2
    x_inv = sample_function(
        lambda zz: np.linalg.inv(gd_symbol_values(spec, tv, zz)), spec.n, M, radius=r_in
    )
    pq = plemelj_quadrature(x, x_inv, blocks)
    return pf, pq


# -- truncation layout -------------------------------------------------------


def test_build_tn_block_layout():
    lm1 = LaurentMatrix(1, -1, 1, np.array([[[0.5]], [[2.0]], [[0.25]]]))
    T3 = build_TN(lm1, 3).matrix
    assert np.allclose(np.diag(T3), 2.0)
    assert T3[1, 0] == 0.25 and T3[0, 1] == 0.5  # mode +1 sits below the diagonal
    assert T3[2, 0] == 0.0 and T3[0, 2] == 0.0


def test_hankel_identity_banded_inputs():
    rng = np.random.default_rng(7)
    a = LaurentMatrix(
        2, -2, 3, rng.normal(size=(6, 2, 2)) + 1j * rng.normal(size=(6, 2, 2))
    )
    b = LaurentMatrix(
        2, -3, 2, rng.normal(size=(6, 2, 2)) + 1j * rng.normal(size=(6, 2, 2))
    )
    rep = hankel_identity_check(a, b, 5)
    assert rep.ok, rep.max_error


@given(st.integers(0, 10**6))
def test_frozen_time_flows_act_by_exponential_character(seed):
    # the finite truncations genuinely depend on the times at multiples of
    # n, but the operator-determinant limit only picks up the explicit
    # scalar factor exp(sum_q t_{qn} * q * (log det base)_{-q}); the
    # log-derivatives of tau (the solution fields) are therefore invariant
    from blocktau.symbols import base_symbol_values
    from blocktau.tau import tau_stable

    rng = np.random.default_rng(seed)
    s2, s4 = 0.4 * (rng.random(2) - 0.5)
    M = 512
    z = np.exp(2j * np.pi * np.arange(M) / M)
    modes = np.fft.fft(np.log(np.linalg.det(base_symbol_values(RSPEC, z)))) / M
    base = [0.1, 0.0, 0.05, 0.0, 0.02]
    t0 = tau_stable(RSPEC, time_vector(base, gd_reduced=False), tol=1e-10)
    tv = time_vector([0.1, s2, 0.05, s4, 0.02], gd_reduced=False)
    got = tau_stable(RSPEC, tv, tol=1e-10)
    character = np.exp(s2 * modes[-1] + s4 * 2 * modes[-2])
    assert abs(got - character * t0) < 1e-9


# -- Plemelj operator: two routes --------------------------------------------


def test_plemelj_fourier_vs_quadrature_rational():
    pf, pq = _plemelj_pair(RSPEC, TV, 8)
    assert np.max(np.abs(pf.matrix - pq.matrix)) < 1e-10


def test_plemelj_fourier_vs_quadrature_covering():
    tv = time_vector([0.1, 0.0, 0.05, 0.0, 0.02])
    pf, pq = _plemelj_pair(CSPEC, tv, 8)
    assert np.max(np.abs(pf.matrix - pq.matrix)) < 1e-9


# -- Fredholm determinant and the Szego-Widom limit --------------------------


def test_fredholm_matches_direct_limit():
    lm = gd_symbol(RSPEC, TV, (-30, 30))
    pf = plemelj_fourier(lm, lm_invert(lm), 8)
    fr = fredholm_det(pf, tol=1e-11)
    x = deformed_symbol_samples(RSPEC, TV, 1024)
    sw = szego_widom(lm, x, tol=1e-11)
    assert abs(fr.value - sw.D_inf) < 1e-9
    assert abs(sw.G - 1.0) < 1e-10  # reduced flows leave G = det-mean at 1


def test_fredholm_grid_invariance():
    lm30 = gd_symbol(RSPEC, TV, (-30, 30))
    lm60 = gd_symbol(RSPEC, TV, (-60, 60))
    v1 = fredholm_det(plemelj_fourier(lm30, lm_invert(lm30), 8), tol=1e-11).value
    v2 = fredholm_det(plemelj_fourier(lm60, lm_invert(lm60), 16), tol=1e-11).value
    assert abs(v1 - v2) < 1e-9


def test_szego_widom_rejects_nonzero_winding():
    co = np.array([[[1.0]]], dtype=complex)
    lm = LaurentMatrix(1, 1, 1, co)
    with pytest.raises(HypothesisError):
        szego_widom(lm, inverse_transform(lm, 256))


def test_half_truncated_shortcut():
    co = np.zeros((4, 1, 1), dtype=complex)
    co[0, 0, 0] = 0.3   # mode -2
    co[1, 0, 0] = -0.2  # mode -1
    co[2, 0, 0] = 1.0   # mode 0
    co[3, 0, 0] = 0.45  # mode +1: the inverse has an infinite plus tail
    sym = LaurentMatrix(1, -2, 1, co)
    sc = half_truncated_shortcut(sym)
    sw = szego_widom(sym, inverse_transform(sym, 1024), tol=1e-12)
    assert abs(sc.D_inf - sw.D_inf) < 1e-9


# -- Borodin-Okounkov --------------------------------------------------------


def test_borodin_okounkov_small_sections():
    x = deformed_symbol_samples(RSPEC, TV, 2048)
    pair = two_sided_factorization(x, B=40, tol=1e-9)
    lm = gd_symbol(RSPEC, TV, (-30, 30))
    sw = szego_widom(lm, x, tol=1e-11)
    for N in (1, 2, 3, 4):
        bo = borodin_okounkov(pair, N, tol=1e-12)
        lhs = det_DN(build_TN(lm, N)) / sw.G**N
        assert abs(lhs - sw.D_inf * bo.det_correction) < 1e-8


# -- Widom derivative formula ------------------------------------------------


def test_widom_derivative_scalar_oracle():
    b_ = 0.35

    def make_sym(xv: float) -> LaurentMatrix:
        cf = np.zeros((3, 1, 1), dtype=complex)
        cf[0, 0, 0] = -b_
        cf[1, 0, 0] = 1 + xv * b_
        cf[2, 0, 0] = -xv
        return LaurentMatrix(1, -1, 1, cf)

    x0 = 0.4
    wd = widom_derivative_check(make_sym, x0, tol=1e-12)
    exact = b_ / (1 - x0 * b_)
    assert abs(wd.contour - exact) < 1e-8
    assert wd.abs_err < 1e-6  # centered difference limits the numeric side
