"""Internal dissipation, admissible-set membership, and trajectory audits.

The dissipation of each model family has a closed constitutive form in both
descriptions. The referential scalar evaluator also recomputes the defining
combination (viscous stress power minus energy release through the internal
variable) and insists the two agree; the audit keeps the two descriptions as
separate columns so their agreement stays observable in the output.

Sign conventions: a model satisfies the second law along a trajectory when
the dissipation never goes below the roundoff-aware threshold; the initial
data for which that is guaranteed form the model's admissible set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mat3
from .constitutive import (
    MaterialParams,
    ModelKind,
    NonlinearOldroydB,
    OldroydA,
    OldroydB,
    PolynomialOldroydB,
    ZarembaJaumann,
    flow_rule,
    free_energy_grad_xi,
    viscous_stress,
)

NEGATIVITY_RTOL = 1e-8
DUAL_ROUTE_TOL = 1e-10


def _poly_coeffs(model: ModelKind, p: MaterialParams) -> list[tuple[int, float]]:
    """Reaction term as [(power of (C Xi) or xi, scalar weight), ...].

    The weight multiplies tr((C Xi)^(j+1)) * mu^(j+1) / (2 lambda1) in the
    referential form and tr(xi^(j+1)) / (2 lambda1) in the spatial one.
    """
    if isinstance(model, NonlinearOldroydB):
        return [(model.k, 1.0 / p.mu_k_for(model.k))]
    if isinstance(model, PolynomialOldroydB):
        return [(j, cj) for j, cj in enumerate(model.coeffs) if cj != 0.0]
    return [(0, 1.0)]


def dissipation(model: ModelKind, f, h_ref, xi_ref, p: MaterialParams) -> float:
    """Referential internal dissipation at one state.

    Evaluated from the model's closed formula, then cross-checked against
    the defining combination T_Rd : H - dA/dXi : K within a relative 1e-10;
    disagreement raises, since it would mean the formula and the flow rule
    drifted apart.
    """
    if abs(mat3.det3(f) - 1.0) > 1e-8:
        raise ValueError("deformation gradient must have unit determinant")
    f = np.asarray(f, dtype=float)
    h_ref = np.asarray(h_ref, dtype=float)
    xi_ref = np.asarray(xi_ref, dtype=float)
    f_inv = mat3.transpose(mat3.cofactor(f))
    d = mat3.sym(h_ref @ f_inv)
    c = f.T @ f
    viscous = 2.0 * p.eta_s * float(np.sum(d * d))

    cx = c @ xi_ref
    elastic = 0.0
    for j, weight in _poly_coeffs(model, p):
        elastic += (
            weight
            * p.mu ** (j + 1)
            / (2.0 * p.lambda1)
            * float(np.trace(np.linalg.matrix_power(cx, j + 1)))
        )
    if isinstance(model, (ZarembaJaumann, OldroydA)):
        scale = 2.0 if isinstance(model, OldroydA) else 1.0
        c_dot = 2.0 * f.T @ d @ f
        elastic += scale * 0.5 * p.mu * mat3.frobenius(xi_ref, c_dot)
    value = viscous + elastic

    # Independent route through the definition.
    power = mat3.frobenius(viscous_stress(f, h_ref, p), h_ref)
    release = mat3.frobenius(
        free_energy_grad_xi(f, p), flow_rule(model, f, h_ref, xi_ref, p)
    )
    defining = power - release
    scale_ref = 1.0 + abs(value) + abs(viscous) + abs(power) + abs(release)
    if abs(value - defining) > DUAL_ROUTE_TOL * scale_ref:
        raise AssertionError(
            "dissipation formula disagrees with its defining combination: "
            f"{value!r} vs {defining!r}"
        )
    return value


def dissipation_euler(model: ModelKind, h, xi, p: MaterialParams) -> float:
    """Spatial internal dissipation at one state, from the closed formula."""
    h = np.asarray(h, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if abs(np.trace(h)) > 1e-8:
        raise ValueError("velocity gradient must be traceless")
    d = mat3.sym(h)
    value = 2.0 * p.eta_s * float(np.sum(d * d))
    for j, weight in _poly_coeffs(model, p):
        value += weight / (2.0 * p.lambda1) * float(
            np.trace(np.linalg.matrix_power(xi, j + 1))
        )
    if isinstance(model, (ZarembaJaumann, OldroydA)):
        scale = 2.0 if isinstance(model, OldroydA) else 1.0
        value += scale * mat3.frobenius(xi, d)
    return value


def c0_membership(model: ModelKind, xi0_ref, tol: float | None = None) -> bool:
    """Whether initial data xi0_ref guarantees nonnegative dissipation.

    Upper-convected linear and even-power families admit exactly the
    positive semi-definite cone (its closure); odd powers admit everything;
    the corotational and lower-convected families admit only zero. The
    polynomial family carries no such classification, so asking is an
    error rather than a guess.
    """
    xi0_ref = np.asarray(xi0_ref, dtype=float)
    if isinstance(model, PolynomialOldroydB):
        raise ValueError("no admissible-set classification for polynomial reaction")
    if isinstance(model, (ZarembaJaumann, OldroydA)):
        limit = 1e-10 if tol is None else tol
        return bool(mat3.norm(xi0_ref) <= limit)
    if isinstance(model, NonlinearOldroydB) and model.k % 2 == 1:
        return True
    return mat3.is_psd(xi0_ref, tol)


def _ordered_eigensystem(xi0_ref):
    """Eigenvalues with |largest| first and a right-handed eigenbasis."""
    vals, vecs = mat3.sym_eig_decomp(xi0_ref)
    order = np.argsort(-np.abs(vals))
    vals = vals[order]
    vecs = vecs[:, order]
    if mat3.det3(vecs) < 0.0:
        vecs = vecs.copy()
        vecs[:, 2] = -vecs[:, 2]
    return vals, vecs


def negative_dissipation_witness(model: ModelKind, xi0_ref, p: MaterialParams):
    """Admissible state (F, H) with strictly negative dissipation at xi0_ref.

    For the corotational and lower-convected families any nonzero xi0_ref
    admits one: stretch the dominant eigendirection by diag(u^1/2, u^-1/2, 1)
    until the dissipation, a quadratic q(kappa) in the shearing amplitude
    along the deviator of F xi0 F^T, has negative minimum; the growth of
    the deviator with u guarantees the sweep terminates. For the linear
    upper-convected model a witness exists exactly when xi0_ref has a
    negative eigenvalue, and pure stretch with H = 0 provides it.

    Returns (F, H, value) with value = dissipation(model, F, H, xi0_ref, p),
    negative. Raises ValueError when no witness exists.
    """
    xi0_ref = mat3.sym(np.asarray(xi0_ref, dtype=float))
    if isinstance(model, OldroydB):
        return _stretch_witness(model, xi0_ref, p)
    if not isinstance(model, (ZarembaJaumann, OldroydA)):
        raise ValueError("witness construction covers the linear rate families only")
    if mat3.norm(xi0_ref) == 0.0:
        raise ValueError("zero initial data admits no negative-dissipation state")

    lin_coef = 2.0 if isinstance(model, OldroydA) else 1.0
    _, vecs = _ordered_eigensystem(xi0_ref)
    q_rows = vecs.T
    for j in range(41):
        u = float(2**j)
        f = np.diag([u**0.5, u**-0.5, 1.0]) @ q_rows
        pushed = f @ xi0_ref @ f.T
        dev = pushed - (np.trace(pushed) / 3.0) * np.eye(3)
        dev_sq = float(np.sum(dev * dev))
        const = np.trace(pushed) / (2.0 * p.mu * p.lambda1)
        if dev_sq == 0.0:
            if const < 0.0:
                kappa = 0.0
            else:
                continue
        elif p.eta_s > 0.0:
            kappa = -lin_coef / (4.0 * p.eta_s)
            q_min = (
                2.0 * p.eta_s * dev_sq * kappa * kappa
                + lin_coef * dev_sq * kappa
                + const
            )
            if q_min >= -1e-9 * (1.0 + abs(const) + dev_sq):
                continue
        else:
            # Linear in kappa: push far enough for a decisive sign.
            kappa = -(1.0 + max(const, 0.0)) / (lin_coef * dev_sq)
        h_ref = (kappa * p.mu) * dev @ f
        value = dissipation(model, f, h_ref, xi0_ref, p)
        if value < 0.0:
            return f, h_ref, value
    raise ValueError("witness search failed to find a negative-dissipation state")


def _stretch_witness(model: OldroydB, xi0_ref, p: MaterialParams):
    vals, vecs = mat3.sym_eig_decomp(xi0_ref)
    if vals[0] >= 0.0:
        raise ValueError(
            "positive semi-definite initial data admits no negative-dissipation "
            "state for the linear upper-convected model"
        )
    if mat3.det3(vecs) < 0.0:
        vecs = vecs.copy()
        vecs[:, 2] = -vecs[:, 2]
    for j in range(61):
        s = float(2**j)
        stretch = np.diag([s**0.5, s**-0.25, s**-0.25])
        f = vecs @ stretch @ vecs.T
        pairing = s * vals[0] + s**-0.5 * (vals[1] + vals[2])
        if pairing < -1e-9 * (1.0 + abs(s * vals[0])):
            value = dissipation(model, f, np.zeros((3, 3)), xi0_ref, p)
            if value < 0.0:
                return f, np.zeros((3, 3)), value
    raise ValueError("witness search failed to find a negative-dissipation state")


def zj_negative_dissipation_witness(xi0_ref, p: MaterialParams):
    """Corotational-model witness; see negative_dissipation_witness."""
    return negative_dissipation_witness(ZarembaJaumann(), xi0_ref, p)


@dataclass
class ThermoReport:
    """Per-sample thermodynamic fields of a trajectory plus event times.

    Event times are None when the event never happens on the grid; both are
    reported at grid resolution.
    """

    t: np.ndarray
    dissipation_lagrangian: np.ndarray
    dissipation_eulerian: np.ndarray
    tr_xi: np.ndarray
    xi_contract_d: np.ndarray
    min_eig_sigma_p: np.ndarray
    psd_flag: np.ndarray
    lower_bound_margin: np.ndarray
    first_negative_dissipation_time: float | None
    psd_exit_time: float | None


def _batched_elastic_ref(model, p, c, xi_ref):
    cx = c @ xi_ref
    out = np.zeros(len(cx))
    for j, weight in _poly_coeffs(model, p):
        power = cx
        for _ in range(j):
            power = power @ cx
        out += (
            weight
            * p.mu ** (j + 1)
            / (2.0 * p.lambda1)
            * np.trace(power, axis1=-2, axis2=-1)
        )
    return out


def _batched_reaction_spatial(model, p, xi):
    out = np.zeros(len(xi))
    for j, weight in _poly_coeffs(model, p):
        power = xi
        for _ in range(j):
            power = power @ xi
        out += weight / (2.0 * p.lambda1) * np.trace(power, axis1=-2, axis2=-1)
    return out


def audit(traj) -> ThermoReport:
    """Thermodynamic audit of a whole trajectory, vectorized over samples.

    The two dissipation columns come from the referential and spatial
    formulas independently; negativity and cone-exit events use the
    roundoff-aware thresholds (relative to the running magnitude for the
    dissipation, to the per-sample norm for eigenvalues).
    """
    model, p = traj.model, traj.params
    d = traj.kin.d
    xi = traj.sigma_p
    xi_ref = traj.xi_ref
    d_normsq = np.sum(d * d, axis=(-2, -1))
    viscous = 2.0 * p.eta_s * d_normsq

    lag = viscous + _batched_elastic_ref(model, p, traj.kin.c, xi_ref)
    xi_d = np.einsum("nij,nij->n", xi, d)
    eul = viscous + _batched_reaction_spatial(model, p, xi)
    if isinstance(model, (ZarembaJaumann, OldroydA)):
        rate_scale = 2.0 if isinstance(model, OldroydA) else 1.0
        lag = lag + rate_scale * 0.5 * p.mu * np.einsum(
            "nij,nij->n", xi_ref, traj.kin.c_dot
        )
        eul = eul + rate_scale * xi_d

    tr_xi = np.trace(xi, axis1=-2, axis2=-1)
    eigs = mat3.sym_eigs_batch(xi)
    min_eig = eigs[:, 0]
    xi_norm = np.sqrt(np.sum(xi * xi, axis=(-2, -1)))
    psd_tol = 1e-10 * (1.0 + xi_norm)
    psd_flag = min_eig >= -psd_tol

    eta_star = p.eta_p / (p.mu * p.lambda1)
    margin = mat3.sym_eigs_batch(xi_ref + eta_star * traj.kin.c_inv)[:, 0]

    running = np.maximum.accumulate(np.abs(eul))
    negative = eul < -NEGATIVITY_RTOL * (1.0 + running)
    neg_idx = np.nonzero(negative)[0]
    first_negative = float(traj.t[neg_idx[0]]) if neg_idx.size else None
    exit_idx = np.nonzero(~psd_flag)[0]
    psd_exit = float(traj.t[exit_idx[0]]) if exit_idx.size else None

    return ThermoReport(
        t=traj.t,
        dissipation_lagrangian=lag,
        dissipation_eulerian=eul,
        tr_xi=tr_xi,
        xi_contract_d=xi_d,
        min_eig_sigma_p=min_eig,
        psd_flag=psd_flag,
        lower_bound_margin=margin,
        first_negative_dissipation_time=first_negative,
        psd_exit_time=psd_exit,
    )
