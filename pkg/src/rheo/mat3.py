"""3x3 matrix algebra.

Not a matrix class; a collection of routines on numpy.ndarrays of shape
(..., 3, 3). Everything here has value semantics and no shared state, so the
functions are safe to call concurrently.
"""

from __future__ import annotations

import math

import numpy as np

I3 = np.eye(3)

# Symmetric 6-entry packing order used at serialization boundaries.
SYM6_ORDER = ("11", "12", "13", "22", "23", "33")


def frobenius(a, b) -> float:
    """Frobenius inner product tr(a^T b) = sum_ij a_ij b_ij."""
    return float(np.sum(np.asarray(a) * np.asarray(b)))


def norm(a) -> float:
    """Frobenius norm."""
    return float(np.sqrt(np.sum(np.square(np.asarray(a, dtype=float)))))


def sym(a):
    """Symmetric part (a + a^T)/2."""
    return 0.5 * (a + np.swapaxes(a, -2, -1))


def skew(a):
    """Skew part (a - a^T)/2."""
    return 0.5 * (a - np.swapaxes(a, -2, -1))


def transpose(a):
    return np.swapaxes(a, -2, -1)


def det3(a):
    """Determinant via the triple product; works on stacks."""
    a = np.asarray(a, dtype=float)
    return np.einsum("...i,...i->...", a[..., 0, :], np.cross(a[..., 1, :], a[..., 2, :]))


def cofactor(a):
    """Cofactor matrix; row i is the cross product of the other two rows.

    For det(a) = 1 the inverse is the transposed cofactor, which is how
    inverses of deformation gradients are taken throughout.
    """
    a = np.asarray(a, dtype=float)
    return np.stack(
        (
            np.cross(a[..., 1, :], a[..., 2, :]),
            np.cross(a[..., 2, :], a[..., 0, :]),
            np.cross(a[..., 0, :], a[..., 1, :]),
        ),
        axis=-2,
    )


def inv3(a):
    """Inverse via cofactor transpose over determinant; works on stacks."""
    d = det3(a)
    return transpose(cofactor(a)) / d[..., None, None]


def _jacobi_eig(s):
    """Cyclic Jacobi rotations for a symmetric 3x3 matrix.

    Robust fallback when the characteristic cubic is ill-conditioned.
    Returns (eigenvalues ascending, eigenvector columns).
    """
    a = sym(np.asarray(s, dtype=float)).copy()
    q = np.eye(3)
    scale = max(np.max(np.abs(a)), 1e-300)
    for _ in range(50):
        off = math.sqrt(a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2)
        if off <= 1e-16 * scale:
            break
        for i, j in ((0, 1), (0, 2), (1, 2)):
            if abs(a[i, j]) <= 1e-18 * scale:
                continue
            theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            sn = t * c
            rot = np.eye(3)
            rot[i, i] = rot[j, j] = c
            rot[i, j] = sn
            rot[j, i] = -sn
            a = rot.T @ a @ rot
            q = q @ rot
    vals = np.diag(a).copy()
    order = np.argsort(vals)
    return vals[order], q[:, order]


def sym_eigs(s):
    """Eigenvalues of a symmetric 3x3 matrix, ascending.

    Analytic trigonometric solution of the characteristic cubic, with a
    Jacobi fallback when the cubic's acos argument leaves [-1, 1] by more
    than roundoff allows.
    """
    s = np.asarray(s, dtype=float)
    p1 = s[0, 1] ** 2 + s[0, 2] ** 2 + s[1, 2] ** 2
    if p1 == 0.0:
        return tuple(sorted((s[0, 0], s[1, 1], s[2, 2])))
    q = (s[0, 0] + s[1, 1] + s[2, 2]) / 3.0
    p2 = (s[0, 0] - q) ** 2 + (s[1, 1] - q) ** 2 + (s[2, 2] - q) ** 2 + 2.0 * p1
    if p2 <= (1e-14 * (1.0 + abs(q))) ** 2:
        # Near-triple eigenvalue; spread is below roundoff resolution.
        return (q, q, q)
    p = math.sqrt(p2 / 6.0)
    r = det3((s - q * I3) / p) / 2.0
    if abs(r) > 1.0 + 1e-9:
        vals, _ = _jacobi_eig(s)
        return (vals[0], vals[1], vals[2])
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    mid = 3.0 * q - hi - lo
    # Near-degenerate pairs can land an ulp out of order.
    lo, mid, hi = sorted((lo, mid, hi))
    return (lo, mid, hi)


def sym_eigs_batch(s):
    """Vectorized analytic eigenvalues for a stack of symmetric matrices.

    Returns shape (..., 3), ascending. Accuracy is a few ulps of the matrix
    scale, which is what the trajectory audits need.
    """
    s = np.asarray(s, dtype=float)
    q = np.trace(s, axis1=-2, axis2=-1) / 3.0
    p1 = s[..., 0, 1] ** 2 + s[..., 0, 2] ** 2 + s[..., 1, 2] ** 2
    p2 = (
        (s[..., 0, 0] - q) ** 2
        + (s[..., 1, 1] - q) ** 2
        + (s[..., 2, 2] - q) ** 2
        + 2.0 * p1
    )
    p = np.sqrt(np.maximum(p2, 0.0) / 6.0)
    safe = p > 1e-150
    ps = np.where(safe, p, 1.0)
    b = (s - q[..., None, None] * I3) / ps[..., None, None]
    r = np.clip(det3(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - hi - lo
    out = np.sort(np.stack((lo, mid, hi), axis=-1), axis=-1)
    return np.where(safe[..., None], out, q[..., None] * np.ones(3))


def sym_eig_decomp(s):
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""
    return _jacobi_eig(s)


def is_psd(s, tol: float | None = None) -> bool:
    """Positive semi-definiteness test: min eigenvalue >= -tol.

    Default tolerance is scale-aware, 1e-10 * (1 + ||s||).
    """
    if tol is None:
        tol = 1e-10 * (1.0 + norm(s))
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    return sym_eigs(s)[0] >= -tol


def mat_exp(a, tol: float = 1e-12):
    """Matrix exponential by scaling and squaring with a truncated series.

    The truncation threshold follows tol; accuracy holds comfortably for
    ||a|| up to ~50, which covers every protocol matrix used here.
    exp(0) = I exactly.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a = np.asarray(a, dtype=float)
    nrm = norm(a)
    s = 0 if nrm <= 0.5 else max(0, int(math.ceil(math.log2(nrm / 0.5))))
    b = a / (2.0**s)
    out = np.eye(3)
    term = np.eye(3)
    # After scaling ||b|| <= 0.5, so terms decay at least like 0.5^n / n!.
    for n in range(1, 60):
        term = term @ b / n
        out = out + term
        if norm(term) <= 0.25 * tol * norm(out) / (2.0**s if s else 1.0):
            break
    for _ in range(s):
        out = out @ out
    return out


def mat_exp_batch(a, tol: float = 1e-12):
    """Matrix exponential of a stack (..., 3, 3), branch-free inner loop."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a = np.asarray(a, dtype=float)
    nrm = float(np.max(np.sqrt(np.sum(np.square(a), axis=(-2, -1))), initial=0.0))
    s = 0 if nrm <= 0.5 else max(0, int(math.ceil(math.log2(nrm / 0.5))))
    b = a / (2.0**s)
    out = np.broadcast_to(I3, a.shape).copy()
    term = out.copy()
    # 26 terms at ||b|| <= 0.5 leave a remainder below 1e-34 relative.
    for n in range(1, 27):
        term = term @ b / n
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def trace_inequality_gap(b, c) -> float:
    """Gap b:c - 3 (det b)^(1/3) (det c)^(1/3) for PSD symmetric arguments.

    Nonnegative for positive semi-definite b and c, with equality at
    b = c = I. Signals if either argument fails the PSD test at tol 1e-9.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not is_psd(b, 1e-9):
        raise ValueError("first argument is not positive semi-definite at tol 1e-9")
    if not is_psd(c, 1e-9):
        raise ValueError("second argument is not positive semi-definite at tol 1e-9")
    # Tiny negative determinants are roundoff from the PSD boundary.
    det_b = max(float(det3(b)), 0.0)
    det_c = max(float(det3(c)), 0.0)
    return frobenius(b, c) - 3.0 * det_b ** (1.0 / 3.0) * det_c ** (1.0 / 3.0)


def sym6_to_mat(v):
    """Symmetric matrix from 6 entries ordered s11,s12,s13,s22,s23,s33."""
    v = np.asarray(v, dtype=float)
    if v.shape != (6,):
        raise ValueError("expected 6 entries")
    return np.array(
        [
            [v[0], v[1], v[2]],
            [v[1], v[3], v[4]],
            [v[2], v[4], v[5]],
        ]
    )


def mat_to_sym6(s):
    """Upper triangle of a symmetric matrix, row-major."""
    s = np.asarray(s, dtype=float)
    return np.array([s[0, 0], s[0, 1], s[0, 2], s[1, 1], s[1, 2], s[2, 2]])
