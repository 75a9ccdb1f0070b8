"""Free energy, stresses, and flow rules for the model families.

Two equivalent descriptions run through everything here. The referential
one evolves a dimensionless symmetric internal variable Xi alongside the
deformation gradient F; the spatial one evolves the polymer stress
xi = mu F Xi F^T directly. Both are exposed; their agreement is checked by
the integration tests, not assumed.

Model families: the classical upper-convected Maxwell/solvent split
(Oldroyd B), its nonlinear power-law and polynomial reaction variants, and
the corotational (Zaremba-Jaumann) and lower-convected (Oldroyd A) versions
obtained by swapping the objective rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mat3

# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class MaterialParams:
    """Material constants.

    mu_k scales the nonlinear reaction term; None means mu**k, which makes
    the spatial equation parameter-free in mu.
    """

    lambda1: float = 1.0
    eta_s: float = 0.0
    eta_p: float = 1.0
    mu: float = 1.0
    mu_k: float | None = None

    def __post_init__(self):
        if not self.lambda1 > 0.0:
            raise ValueError("lambda1 must be positive")
        if self.eta_s < 0.0 or self.eta_p < 0.0:
            raise ValueError("viscosities must be nonnegative")
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if self.mu_k is not None and not self.mu_k > 0.0:
            raise ValueError("mu_k must be positive")

    @property
    def eta(self) -> float:
        return self.eta_s + self.eta_p

    @property
    def lambda2(self) -> float:
        """Retardation time lambda1 eta_s / eta; never exceeds lambda1."""
        return self.lambda1 * self.eta_s / self.eta

    def mu_k_for(self, k: int) -> float:
        return self.mu**k if self.mu_k is None else self.mu_k


@dataclass(frozen=True)
class OldroydB:
    """Linear relaxation with the upper-convected rate."""


@dataclass(frozen=True)
class NonlinearOldroydB:
    """Reaction term (stress)^(k+1) instead of stress; upper-convected."""

    k: int = 1

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError("k must be an integer >= 1 (k = 0 is OldroydB)")


@dataclass(frozen=True)
class PolynomialOldroydB:
    """Reaction term stress * P(stress), P given by coefficients.

    coeffs = (c0, c1, ...) encodes P(X) = c0 + c1 X + c2 X^2 + ...;
    (1.0,) reproduces OldroydB.
    """

    coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValueError("coeffs must be nonempty")


@dataclass(frozen=True)
class ZarembaJaumann:
    """Linear relaxation with the corotational rate."""


@dataclass(frozen=True)
class OldroydA:
    """Linear relaxation with the lower-convected rate."""


ModelKind = (
    OldroydB | NonlinearOldroydB | PolynomialOldroydB | ZarembaJaumann | OldroydA
)

RateKind = str  # "corotational" | "lower_convected" | "upper_convected"


def objective_rate_kind(model: ModelKind) -> RateKind:
    """The objective rate the model's spatial equation is written with."""
    if isinstance(model, ZarembaJaumann):
        return "corotational"
    if isinstance(model, OldroydA):
        return "lower_convected"
    return "upper_convected"


def _require_unit_det(f):
    if abs(mat3.det3(f) - 1.0) > 1e-8:
        raise ValueError("deformation gradient must have unit determinant")


# ----------------------------------------------------- energy and stresses


def free_energy(f, xi_ref, p: MaterialParams) -> float:
    """Polymer free energy (mu/2) Xi : C with C = F^T F."""
    _require_unit_det(f)
    return 0.5 * p.mu * mat3.frobenius(xi_ref, np.swapaxes(f, -2, -1) @ f)


def free_energy_grad_f(f, xi_ref, p: MaterialParams):
    """Gradient of free_energy in F, projected tangent to det F = 1.

    mu (F Xi - (tr Xi / tr C^-1) cof F); the projection removes the
    component along cof F, which a pressure absorbs.
    """
    _require_unit_det(f)
    cof = mat3.cofactor(f)
    c_inv = cof.T @ cof  # F^-1 F^-T at det 1
    return p.mu * (f @ xi_ref - (np.trace(xi_ref) / np.trace(c_inv)) * cof)


def free_energy_grad_xi(f, p: MaterialParams):
    """Gradient of free_energy in Xi: (mu/2) F^T F."""
    return 0.5 * p.mu * np.swapaxes(f, -2, -1) @ f


def viscous_stress(f, h_ref, p: MaterialParams):
    """Referential Newtonian stress 2 eta_s Sym(H F^-1) F^-T."""
    _require_unit_det(f)
    f_inv = mat3.transpose(mat3.cofactor(f))
    d = mat3.sym(h_ref @ f_inv)
    return 2.0 * p.eta_s * d @ f_inv.T


def polymer_stress(f, xi_ref, p: MaterialParams):
    """Spatial polymer stress mu F Xi F^T."""
    return p.mu * f @ xi_ref @ np.swapaxes(f, -2, -1)


# --------------------------------------------------------------- flow rules


def _reaction_ref(model: ModelKind, xi_ref, c, p: MaterialParams):
    """Relaxation part of the referential flow rule (no viscous source)."""
    if isinstance(model, NonlinearOldroydB):
        cx = c @ xi_ref
        return -(p.mu**model.k / (p.lambda1 * p.mu_k_for(model.k))) * (
            xi_ref @ np.linalg.matrix_power(cx, model.k)
        )
    if isinstance(model, PolynomialOldroydB):
        cx = c @ xi_ref
        acc = np.zeros((3, 3))
        power = np.eye(3)
        for j, cj in enumerate(model.coeffs):
            if cj != 0.0:
                acc = acc + (cj * p.mu**j) * (xi_ref @ power)
            power = power @ cx
        return -acc / p.lambda1
    return -xi_ref / p.lambda1


def flow_rule(model: ModelKind, f, h_ref, xi_ref, p: MaterialParams):
    """Referential rate of the internal variable, d(Xi)/dt.

    All families share the viscous source (2 eta_p / (mu lambda1))
    F^-1 d F^-T; they differ in the relaxation term and, for the
    corotational and lower-convected families, in convection corrections
    that vanish at H = 0.
    """
    _require_unit_det(f)
    f_inv = mat3.transpose(mat3.cofactor(f))
    d = mat3.sym(h_ref @ f_inv)
    c = f.T @ f
    rate = _reaction_ref(model, xi_ref, c, p) + (
        2.0 * p.eta_p / (p.mu * p.lambda1)
    ) * (f_inv @ d @ f_inv.T)
    if isinstance(model, (ZarembaJaumann, OldroydA)):
        scale = 2.0 if isinstance(model, OldroydA) else 1.0
        corr = f_inv @ d @ f @ xi_ref
        rate = rate - scale * (corr + corr.T)
    return mat3.sym(rate)


def _reaction_spatial(model: ModelKind, xi, p: MaterialParams):
    if isinstance(model, NonlinearOldroydB):
        return -np.linalg.matrix_power(xi, model.k + 1) / (
            p.lambda1 * p.mu_k_for(model.k)
        )
    if isinstance(model, PolynomialOldroydB):
        acc = np.zeros((3, 3))
        power = xi.copy()
        for cj in model.coeffs:
            if cj != 0.0:
                acc = acc + cj * power
            power = power @ xi
        return -acc / p.lambda1
    return -xi / p.lambda1


def flow_rule_euler(model: ModelKind, h, xi, p: MaterialParams):
    """Spatial rate of the polymer stress, d(xi)/dt at a material point.

    The convection term is the one matching the model's objective rate:
    h xi + xi h^T (upper), w xi - xi w (corotational), -h^T xi - xi h
    (lower). tr h must vanish within 1e-8 (incompressible fields only).
    """
    if abs(np.trace(h)) > 1e-8:
        raise ValueError("velocity gradient must be traceless")
    d = mat3.sym(h)
    kind = objective_rate_kind(model)
    if kind == "corotational":
        w = h - d
        conv = w @ xi - xi @ w
    elif kind == "lower_convected":
        conv = -(h.T @ xi + xi @ h)
    else:
        conv = h @ xi + xi @ h.T
    return mat3.sym(conv + _reaction_spatial(model, xi, p) + (2.0 * p.eta_p / p.lambda1) * d)


def objective_derivative(kind: RateKind, sigma_dot, sigma, h):
    """Objective rate of a symmetric spatial tensor.

    corotational:    sigma_dot + sigma w - w sigma
    lower_convected: sigma_dot + h^T sigma + sigma h
    upper_convected: sigma_dot - h sigma - sigma h^T
    All coincide with sigma_dot when h = 0.
    """
    if kind == "corotational":
        w = mat3.skew(h)
        return sigma_dot + sigma @ w - w @ sigma
    if kind == "lower_convected":
        return sigma_dot + np.swapaxes(h, -2, -1) @ sigma + sigma @ h
    if kind == "upper_convected":
        return sigma_dot - h @ sigma - sigma @ np.swapaxes(h, -2, -1)
    raise ValueError(f"unknown objective rate kind: {kind!r}")


def constitutive_residual(model: ModelKind, traj, i: int, p: MaterialParams) -> float:
    """Defect of the spatial differential law at an interior grid index.

    The stress rate is a centered difference of polymer-stress samples, so
    a correct trajectory leaves a residual of order dt^2. The reaction term
    and the objective rate are the model's own; evaluating with a
    mismatched model is a deliberate discrimination check.
    """
    n = len(traj.t)
    if not 0 < i < n - 1:
        raise IndexError("residual needs an interior grid index")
    dt = traj.t[1] - traj.t[0]
    sig_0 = traj.sigma_p[i]
    sigma_dot = (traj.sigma_p[i + 1] - traj.sigma_p[i - 1]) / (2.0 * dt)
    h = traj.h[i]
    rate = objective_derivative(objective_rate_kind(model), sigma_dot, sig_0, h)
    reaction = -p.lambda1 * _reaction_spatial(model, sig_0, p)
    return mat3.norm(reaction + p.lambda1 * rate - 2.0 * p.eta_p * mat3.sym(h))
