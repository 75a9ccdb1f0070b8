"""Matrix routines against independent oracles.

Eigenvalues are checked against a bisection solver on the characteristic
polynomial (no shared code path with the analytic formula), the exponential
against scipy.linalg.expm, and the algebraic identities with hypothesis.
"""

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from rheo import mat3
from rheo.rng import SplitMix64

# ---------------------------------------------------------------- oracles


def charpoly_eigs_bisect(s):
    """Eigenvalues by bisection on the characteristic polynomial.

    Roots of p(x) = det(s - x I) are bracketed by the Gershgorin bound and
    separated by the roots of p', found by the quadratic formula. Entirely
    independent of the trigonometric route under test.
    """
    s = np.asarray(s, dtype=float)
    tr = s[0, 0] + s[1, 1] + s[2, 2]
    # p(x) = -x^3 + tr x^2 - c1 x + det
    c1 = (
        s[0, 0] * s[1, 1]
        + s[0, 0] * s[2, 2]
        + s[1, 1] * s[2, 2]
        - s[0, 1] ** 2
        - s[0, 2] ** 2
        - s[1, 2] ** 2
    )
    det = float(np.linalg.det(s))

    def p(x):
        return -(x**3) + tr * x**2 - c1 * x + det

    # Critical points of p: roots of -3x^2 + 2 tr x - c1.
    disc = tr * tr - 3.0 * c1
    bound = float(np.max(np.sum(np.abs(s), axis=1))) + 1.0
    if disc <= 0.0:
        # Monotone cubic: single eigenvalue of multiplicity three (symmetric
        # case), all equal to tr/3.
        return [tr / 3.0] * 3

    r = math.sqrt(disc)
    x1, x2 = (tr - r) / 3.0, (tr + r) / 3.0
    brackets = [(-bound, x1), (x1, x2), (x2, bound)]
    roots = []
    for lo, hi in brackets:
        flo, fhi = p(lo), p(hi)
        if flo * fhi > 0.0:
            # Double root at the shared bracket endpoint.
            roots.append(x1 if abs(p(x1)) <= abs(p(x2)) else x2)
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = p(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if flo * fm < 0.0:
                hi, fhi = mid, fm
            else:
                lo, flo = mid, fm
        roots.append(0.5 * (lo + hi))
    return sorted(roots)


def sym_matrices(seed_range):
    for seed in seed_range:
        yield SplitMix64(seed).sym_mat3()


# ---------------------------------------------------------------- basics


def test_frobenius_matches_elementwise():
    a = SplitMix64(1).mat3()
    b = SplitMix64(2).mat3()
    expect = sum(a[i, j] * b[i, j] for i in range(3) for j in range(3))
    assert mat3.frobenius(a, b) == pytest.approx(expect, rel=1e-15)


def test_sym_skew_decompose():
    a = SplitMix64(3).mat3()
    np.testing.assert_allclose(mat3.sym(a) + mat3.skew(a), a, atol=1e-16)
    np.testing.assert_array_equal(mat3.sym(a), mat3.sym(a).T)
    np.testing.assert_array_equal(mat3.skew(a), -mat3.skew(a).T)


def test_det_and_inverse_against_numpy():
    for seed in range(20):
        a = SplitMix64(seed).mat3() + 2.0 * np.eye(3)
        assert mat3.det3(a) == pytest.approx(np.linalg.det(a), rel=1e-12)
        np.testing.assert_allclose(mat3.inv3(a), np.linalg.inv(a), atol=1e-12)


def test_cofactor_identity():
    # a cof(a)^T = det(a) I
    for seed in range(20):
        a = SplitMix64(seed).mat3()
        lhs = a @ mat3.cofactor(a).T
        np.testing.assert_allclose(lhs, mat3.det3(a) * np.eye(3), atol=1e-14)


def test_cofactor_batched():
    stack = np.stack([SplitMix64(s).mat3() for s in range(5)])
    single = np.stack([mat3.cofactor(m) for m in stack])
    np.testing.assert_array_equal(mat3.cofactor(stack), single)


def test_det3_batched():
    stack = np.stack([SplitMix64(s).mat3() for s in range(5)])
    np.testing.assert_allclose(mat3.det3(stack), np.linalg.det(stack), rtol=1e-12)


# ------------------------------------------------------------- eigenvalues


def test_sym_eigs_against_bisection():
    for s in sym_matrices(range(200)):
        got = mat3.sym_eigs(s)
        want = charpoly_eigs_bisect(s)
        scale = 1.0 + float(np.abs(s).max())
        np.testing.assert_allclose(got, want, atol=1e-10 * scale)


def test_sym_eigs_diagonal_exact():
    assert mat3.sym_eigs(np.diag([3.0, -1.0, 2.0])) == (-1.0, 2.0, 3.0)


def test_sym_eigs_triple_root():
    assert mat3.sym_eigs(4.0 * np.eye(3)) == (4.0, 4.0, 4.0)


def test_sym_eigs_near_degenerate():
    # Two eigenvalues split by 1e-13: the analytic route must not produce
    # complex garbage; values should still match bisection loosely.
    s = np.diag([1.0, 1.0 + 1e-13, 2.0])
    q = np.linalg.qr(SplitMix64(17).mat3())[0]
    s = q @ s @ q.T
    got = mat3.sym_eigs(mat3.sym(s))
    np.testing.assert_allclose(got, [1.0, 1.0, 2.0], atol=1e-9)


def test_sym_eigs_scale_invariance():
    s = SplitMix64(23).sym_mat3()
    big = mat3.sym_eigs(1e8 * s)
    base = mat3.sym_eigs(s)
    np.testing.assert_allclose(big, [1e8 * b for b in base], rtol=1e-12)


def test_sym_eigs_batch_matches_scalar():
    stack = np.stack([SplitMix64(s).sym_mat3() for s in range(50)])
    got = mat3.sym_eigs_batch(stack)
    for i in range(50):
        np.testing.assert_allclose(got[i], mat3.sym_eigs(stack[i]), atol=1e-12)


def test_sym_eig_decomp_reconstructs():
    for s in sym_matrices(range(30)):
        vals, vecs = mat3.sym_eig_decomp(s)
        np.testing.assert_allclose(vecs @ np.diag(vals) @ vecs.T, s, atol=1e-12)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(3), atol=1e-12)
        assert vals[0] <= vals[1] <= vals[2]


def test_is_psd():
    assert mat3.is_psd(np.eye(3))
    assert mat3.is_psd(np.zeros((3, 3)))
    assert not mat3.is_psd(np.diag([1.0, 1.0, -1e-3]))
    # Scale-aware default: tiny negative eig on a large matrix passes.
    s = 1e6 * np.eye(3)
    s[2, 2] = -1e-5
    assert mat3.is_psd(s)
    with pytest.raises(ValueError, match="nonnegative"):
        mat3.is_psd(np.eye(3), tol=-1.0)


# ------------------------------------------------------------ exponential


def test_mat_exp_against_scipy():
    for seed in range(30):
        a = 3.0 * SplitMix64(seed).mat3()
        np.testing.assert_allclose(
            mat3.mat_exp(a), scipy.linalg.expm(a), rtol=1e-11, atol=1e-11
        )


def test_mat_exp_large_norm():
    a = 20.0 * SplitMix64(77).mat3()
    assert mat3.norm(a) > 15.0
    ref = scipy.linalg.expm(a)
    np.testing.assert_allclose(mat3.mat_exp(a), ref, rtol=1e-9, atol=1e-9 * mat3.norm(ref))


def test_mat_exp_zero_is_identity_exact():
    np.testing.assert_array_equal(mat3.mat_exp(np.zeros((3, 3))), np.eye(3))


def test_mat_exp_det_identity():
    # det(exp a) = exp(tr a), second route through the determinant.
    for seed in range(10):
        a = SplitMix64(seed).mat3()
        assert mat3.det3(mat3.mat_exp(a)) == pytest.approx(
            math.exp(np.trace(a)), rel=1e-12
        )


def test_mat_exp_tol_validation():
    with pytest.raises(ValueError, match="positive"):
        mat3.mat_exp(np.eye(3), tol=0.0)
    with pytest.raises(ValueError, match="positive"):
        mat3.mat_exp_batch(np.eye(3)[None], tol=-1e-3)


def test_mat_exp_batch_matches_scalar():
    stack = np.stack([2.0 * SplitMix64(s).mat3() for s in range(8)])
    got = mat3.mat_exp_batch(stack)
    for i in range(8):
        np.testing.assert_allclose(got[i], mat3.mat_exp(stack[i]), rtol=1e-12, atol=1e-13)


# --------------------------------------------------------- trace inequality


def test_trace_inequality_gap_identity_zero():
    assert mat3.trace_inequality_gap(np.eye(3), np.eye(3)) == 0.0


def test_trace_inequality_gap_nonnegative():
    for seed in range(100):
        gen = SplitMix64(seed)
        b, c = gen.psd_mat3(), gen.psd_mat3()
        assert mat3.trace_inequality_gap(b, c) >= 0.0


def test_trace_inequality_gap_rejects_non_psd():
    with pytest.raises(ValueError, match="not positive semi-definite"):
        mat3.trace_inequality_gap(np.diag([1.0, 1.0, -1.0]), np.eye(3))
    with pytest.raises(ValueError, match="not positive semi-definite"):
        mat3.trace_inequality_gap(np.eye(3), np.diag([1.0, 1.0, -1.0]))


def test_trace_inequality_known_value():
    b = np.diag([4.0, 1.0, 1.0])
    c = np.eye(3)
    # b:c = 6, det b = 4 -> gap = 6 - 3 * 4^(1/3)
    assert mat3.trace_inequality_gap(b, c) == pytest.approx(
        6.0 - 3.0 * 4.0 ** (1.0 / 3.0), rel=1e-14
    )


# ------------------------------------------------------------------- sym6


def test_sym6_round_trip():
    s = SplitMix64(31).sym_mat3()
    np.testing.assert_array_equal(mat3.sym6_to_mat(mat3.mat_to_sym6(s)), s)


def test_sym6_order():
    v = np.arange(1.0, 7.0)
    s = mat3.sym6_to_mat(v)
    assert s[0, 0] == 1.0 and s[0, 1] == 2.0 and s[0, 2] == 3.0
    assert s[1, 1] == 4.0 and s[1, 2] == 5.0 and s[2, 2] == 6.0


def test_sym6_rejects_wrong_shape():
    with pytest.raises(ValueError, match="6 entries"):
        mat3.sym6_to_mat(np.arange(5.0))


# ------------------------------------------------------- property testing

finite_entries = st.floats(
    min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False
)


@st.composite
def sym_mats(draw):
    vals = [draw(finite_entries) for _ in range(6)]
    return mat3.sym6_to_mat(np.array(vals))


@settings(max_examples=200, deadline=None)
@given(sym_mats())
def test_eigs_sum_to_trace(s):
    lo, mid, hi = mat3.sym_eigs(s)
    scale = 1.0 + float(np.abs(s).max())
    assert lo <= mid <= hi
    assert abs((lo + mid + hi) - np.trace(s)) <= 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(sym_mats())
def test_eigs_product_is_det(s):
    lo, mid, hi = mat3.sym_eigs(s)
    scale = (1.0 + float(np.abs(s).max())) ** 3
    assert abs(lo * mid * hi - mat3.det3(s)) <= 1e-9 * scale


@settings(max_examples=100, deadline=None)
@given(sym_mats(), sym_mats())
def test_psd_shift_gap_nonnegative(a, b):
    # Shift both up to be safely PSD, then the gap must be >= -roundoff.
    a = a - (mat3.sym_eigs(a)[0] - 1e-6) * np.eye(3)
    b = b - (mat3.sym_eigs(b)[0] - 1e-6) * np.eye(3)
    scale = 1.0 + mat3.norm(a) * mat3.norm(b)
    assert mat3.trace_inequality_gap(a, b) >= -1e-9 * scale
