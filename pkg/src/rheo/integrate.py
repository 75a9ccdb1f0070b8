"""Time integration of the internal-variable models.

Fixed-step classical RK4 in either description (referential Xi or spatial
polymer stress), plus three closed forms: the exponential-kernel solution
of the linear referential equation, the explicit planar-extension solution
at unit relaxation time, and the homogeneous matrix Riccati solution that
governs the quadratic (k = 1, no viscous source) family.

Kinematics are sampled once on the half-step grid before stepping, so the
per-step work is a handful of 3x3 numpy operations and trajectories are
bit-reproducible for a given grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kinematics as kin
from . import mat3
from .constitutive import (
    MaterialParams,
    ModelKind,
    NonlinearOldroydB,
    OldroydA,
    OldroydB,
    PolynomialOldroydB,
    ZarembaJaumann,
)

BLOWUP_NORM = 1e12
RICCATI_COND_LIMIT = 1e14

COMPLETE = "complete"
BLOWN_UP = "blown_up"


@dataclass
class Trajectory:
    """One integrated run on a uniform grid.

    xi_ref is the dimensionless internal variable, sigma_p the spatial
    polymer stress mu F xi_ref F^T; whichever was not integrated directly
    is reconstructed after the run. On blow-up the arrays stop at the last
    finite state and blowup_time records the grid time of detection.
    """

    model: ModelKind
    params: MaterialParams
    protocol: object
    t: np.ndarray
    kin: kin.PathSample
    xi_ref: np.ndarray
    sigma_p: np.ndarray
    status: str
    blowup_time: float | None = None

    @property
    def f(self) -> np.ndarray:
        return self.kin.f

    @property
    def h(self) -> np.ndarray:
        return self.kin.h

    @property
    def d(self) -> np.ndarray:
        return self.kin.d

    @property
    def c_inv(self) -> np.ndarray:
        return self.kin.c_inv

    @property
    def xi(self) -> np.ndarray:
        """Spatial polymer stress; identical to sigma_p."""
        return self.sigma_p

    def __len__(self) -> int:
        return len(self.t)


def _grid(t0: float, t_end: float, dt: float) -> int:
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_end <= t0:
        raise ValueError("t_end must exceed the protocol start time")
    span = t_end - t0
    n = round(span / dt)
    if n < 1 or abs(n * dt - span) > 1e-6 * max(1.0, abs(span)):
        raise ValueError("(t_end - t0) must be an integer number of dt steps")
    return n


def _fine_path(protocol, t0: float, dt: float, n: int) -> kin.PathSample:
    ts = t0 + 0.5 * dt * np.arange(2 * n + 1)
    return kin.sample_path(protocol, ts)


def _node_view(path: kin.PathSample) -> kin.PathSample:
    return kin.PathSample(
        **{name: getattr(path, name)[::2] for name in path.__dataclass_fields__}
    )


def _rk4(rhs, y0: np.ndarray, n: int, dt: float):
    """March y through n steps; rhs(j, y) takes a half-grid index.

    Returns (states array (m+1,3,3), status, index of detection). States
    are symmetrized every step; the march stops once the squared norm
    passes the blow-up threshold or goes non-finite.
    """
    out = np.empty((n + 1, 3, 3))
    y = mat3.sym(np.asarray(y0, dtype=float))
    out[0] = y
    limit_sq = BLOWUP_NORM * BLOWUP_NORM
    half = 0.5 * dt
    sixth = dt / 6.0
    for i in range(n):
        j = 2 * i
        k1 = rhs(j, y)
        k2 = rhs(j + 1, y + half * k1)
        k3 = rhs(j + 1, y + half * k2)
        k4 = rhs(j + 2, y + dt * k3)
        y = y + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        y = 0.5 * (y + y.T)
        nrm_sq = float(np.sum(y * y))
        if not nrm_sq < limit_sq:
            return out[: i + 1], BLOWN_UP, i + 1
        out[i + 1] = y
    return out, COMPLETE, n


def _truncate(path: kin.PathSample, m: int) -> kin.PathSample:
    return kin.PathSample(
        **{name: getattr(path, name)[:m] for name in path.__dataclass_fields__}
    )


def _lagrangian_rhs(model: ModelKind, p: MaterialParams, path: kin.PathSample):
    lam = p.lambda1
    # Viscous source (2 eta_p/(mu lambda1)) F^-1 d F^-T, one array for the
    # whole grid; equals -eta* d(C^-1)/dt.
    src = (-p.eta_p / (p.mu * lam)) * path.c_inv_dot

    if isinstance(model, NonlinearOldroydB):
        coef = -(p.mu**model.k) / (lam * p.mu_k_for(model.k))
        c = path.c
        k = model.k

        def rhs(j, y):
            cy = c[j] @ y
            return coef * (y @ np.linalg.matrix_power(cy, k)) + src[j]

        return rhs

    if isinstance(model, PolynomialOldroydB):
        c = path.c
        coeffs = [(cj * p.mu**jj) / lam for jj, cj in enumerate(model.coeffs)]

        def rhs(j, y):
            cy = c[j] @ y
            acc = np.zeros((3, 3))
            power = np.eye(3)
            for w in coeffs:
                if w != 0.0:
                    acc = acc + w * (y @ power)
                power = power @ cy
            return src[j] - acc

        return rhs

    if isinstance(model, (ZarembaJaumann, OldroydA)):
        scale = 2.0 if isinstance(model, OldroydA) else 1.0
        # Convection correction -s (P y + (P y)^T), P = F^-1 d F.
        f_inv = mat3.transpose(mat3.cofactor(path.f))
        pmat = scale * (f_inv @ path.d @ path.f)

        def rhs(j, y):
            py = pmat[j] @ y
            return src[j] - y / lam - (py + py.T)

        return rhs

    def rhs(j, y):
        return src[j] - y / lam

    return rhs


def _eulerian_rhs(model: ModelKind, p: MaterialParams, path: kin.PathSample):
    lam = p.lambda1
    src = (2.0 * p.eta_p / lam) * path.d
    h = path.h
    w = path.w

    if isinstance(model, NonlinearOldroydB):
        coef = -1.0 / (lam * p.mu_k_for(model.k))
        kp1 = model.k + 1

        def rhs(j, y):
            hj = h[j]
            return hj @ y + y @ hj.T + coef * np.linalg.matrix_power(y, kp1) + src[j]

        return rhs

    if isinstance(model, PolynomialOldroydB):
        coeffs = [cj / lam for cj in model.coeffs]

        def rhs(j, y):
            hj = h[j]
            acc = np.zeros((3, 3))
            power = y
            for w_ in coeffs:
                if w_ != 0.0:
                    acc = acc + w_ * power
                power = power @ y
            return hj @ y + y @ hj.T - acc + src[j]

        return rhs

    if isinstance(model, ZarembaJaumann):

        def rhs(j, y):
            wj = w[j]
            return wj @ y - y @ wj - y / lam + src[j]

        return rhs

    if isinstance(model, OldroydA):

        def rhs(j, y):
            hj = h[j]
            return -(hj.T @ y + y @ hj) - y / lam + src[j]

        return rhs

    def rhs(j, y):
        hj = h[j]
        return hj @ y + y @ hj.T - y / lam + src[j]

    return rhs


def _assemble(model, p, protocol, path, n, states, status, stop, from_spatial):
    node = _node_view(path)
    m = len(states)
    tfull = node.t
    if m < n + 1:
        node = _truncate(node, m)
    if from_spatial:
        sigma_p = states
        f_inv = mat3.transpose(mat3.cofactor(node.f))
        xi_ref = (f_inv @ sigma_p @ mat3.transpose(f_inv)) / p.mu
    else:
        xi_ref = states
        sigma_p = p.mu * node.f @ xi_ref @ mat3.transpose(node.f)
    blowup_time = None if status == COMPLETE else float(tfull[stop])
    return Trajectory(
        model=model,
        params=p,
        protocol=protocol,
        t=node.t,
        kin=node,
        xi_ref=xi_ref,
        sigma_p=sigma_p,
        status=status,
        blowup_time=blowup_time,
    )


def integrate_lagrangian(
    model: ModelKind, p: MaterialParams, protocol, xi0_ref, t_end: float, dt: float
) -> Trajectory:
    """RK4 on the referential internal variable from Xi(t0) = xi0_ref."""
    n = _grid(protocol.t0, t_end, dt)
    path = _fine_path(protocol, protocol.t0, dt, n)
    rhs = _lagrangian_rhs(model, p, path)
    states, status, stop = _rk4(rhs, xi0_ref, n, dt)
    return _assemble(model, p, protocol, path, n, states, status, stop, False)


def integrate_eulerian(
    model: ModelKind, p: MaterialParams, protocol, xi0, t_end: float, dt: float
) -> Trajectory:
    """RK4 on the spatial polymer stress from xi(t0) = xi0."""
    n = _grid(protocol.t0, t_end, dt)
    path = _fine_path(protocol, protocol.t0, dt, n)
    rhs = _eulerian_rhs(model, p, path)
    states, status, stop = _rk4(rhs, xi0, n, dt)
    return _assemble(model, p, protocol, path, n, states, status, stop, True)


def _kernel_weights(x: float):
    """End/start weights of the exponentially weighted three-point rule.

    Over one step of size delta with damping exp(-x), x = delta/lambda1,
    the integral a * int e^{(s-t1)/lambda1} G(s) ds with G interpolated
    quadratically through the step's endpoints and midpoint is
    (1-u) G_mid + a0 (G_0 - G_mid) + a1 (G_1 - G_mid). Writing it that way
    makes a constant G integrate with no cancellation noise. Series
    branches keep the coefficients accurate when x is tiny.
    """
    one_minus_u = -math.expm1(-x)
    if x < 1e-2:
        r1 = x * (x * (x * (x / 720.0 - 1.0 / 120.0) + 1.0 / 24.0) - 1.0 / 6.0) + 0.5
        r2 = x * (
            x * (x * (x / 2520.0 - 1.0 / 360.0) + 1.0 / 60.0) - 1.0 / 12.0
        ) * x + x / 3.0
    else:
        p0 = one_minus_u / x
        r1 = (1.0 - p0) / x
        r2 = 1.0 - 2.0 * r1
    a0 = 2.0 * r2 - 3.0 * x * r1 + one_minus_u
    a1 = 2.0 * r2 - x * r1
    return one_minus_u, a0, a1


def duhamel_oldroyd_b(
    p: MaterialParams, protocol, xi0_ref, t_end: float, dt: float
) -> Trajectory:
    """Exponential-kernel closed form for the linear referential equation.

    Steps the one-interval variation-of-constants identity
    Xi(t+dt) = u Xi(t) + eta* (u C^-1(t) - C^-1(t+dt) + a I_loc), u = e^{-x},
    with the weighted quadrature of _kernel_weights on the step's half-grid
    nodes. Degree-2 interpolation gives O(dt^4) error; a constant C
    telescopes to the pure relaxation solution at roundoff level.
    """
    n = _grid(protocol.t0, t_end, dt)
    path = _fine_path(protocol, protocol.t0, dt, n)
    eta_star = p.eta_p / (p.mu * p.lambda1)
    x = dt / p.lambda1
    u = math.exp(-x)
    one_minus_u, a0, a1 = _kernel_weights(x)

    g0 = path.c_inv[0:-1:2]
    gm = path.c_inv[1::2]
    g1 = path.c_inv[2::2]
    src = eta_star * (
        u * g0 - g1 + one_minus_u * gm + a0 * (g0 - gm) + a1 * (g1 - gm)
    )

    states = np.empty((n + 1, 3, 3))
    y = mat3.sym(np.asarray(xi0_ref, dtype=float))
    states[0] = y
    for i in range(n):
        y = u * y + src[i]
        states[i + 1] = y
    return _assemble(OldroydB(), p, protocol, path, n, states, COMPLETE, n, False)


def analytic_planar_extension(xi0_ref, eta_p: float, mu: float, t: float) -> np.ndarray:
    """Closed-form internal variable under planar extension, lambda1 = 1.

    Xi(t) = e^-t Xi0 + (2 eta_p/mu) diag(e^-t - e^-2t, (e^-t - e^2t)/3, 0).
    The middle entry turns negative immediately, so the solution leaves the
    positive semi-definite cone and its smallest eigenvalue diverges.
    """
    xi0_ref = np.asarray(xi0_ref, dtype=float)
    et = math.exp(-t)
    drive = np.diag(
        [
            et - math.exp(-2.0 * t),
            (et - math.exp(2.0 * t)) / 3.0,
            0.0,
        ]
    )
    return et * xi0_ref + (2.0 * eta_p / mu) * drive


def analytic_planar_extension_energy_pairing(
    xi0_ref, eta_p: float, mu: float, t: float
) -> float:
    """Closed form of Xi(t):C(t) for the same flow.

    e^-t Xi0:C(t) + (2 eta_p/mu)(e^t + e^-3t/3 - 4/3) with
    C(t) = diag(e^2t, e^-2t, 1); stays positive even after Xi(t) leaves
    the cone.
    """
    xi0_ref = np.asarray(xi0_ref, dtype=float)
    c = np.diag([math.exp(2.0 * t), math.exp(-2.0 * t), 1.0])
    bracket = math.exp(t) + math.exp(-3.0 * t) / 3.0 - 4.0 / 3.0
    return math.exp(-t) * mat3.frobenius(xi0_ref, c) + (2.0 * eta_p / mu) * bracket


@dataclass
class RiccatiSolution:
    """Closed-form states of Z' = -Z C Z with blow-up bookkeeping.

    On blow-up the state array stops at the last node where
    I + (int C) Z0 was safely invertible; the true blow-up time lies in
    blowup_bracket (one grid step wide).
    """

    t: np.ndarray
    z: np.ndarray
    status: str
    blowup_time: float | None = None
    blowup_bracket: tuple[float, float] | None = None

    def __len__(self) -> int:
        return len(self.t)


def riccati_homogeneous(protocol, z0, t_end: float, dt: float) -> RiccatiSolution:
    """Evaluate Z(t) = Z0 (I + (int_0^t C) Z0)^-1 on a uniform grid.

    The running integral of C uses the three-point (Simpson) rule on each
    step, accumulated, so the quadrature error is O(dt^4). Non-invertibility
    is reported as blow-up: the first node where the matrix to invert has
    Frobenius condition estimate above 1e14, a flipped determinant sign, or
    a non-finite inverse.
    """
    n = _grid(protocol.t0, t_end, dt)
    path = _fine_path(protocol, protocol.t0, dt, n)
    z0 = mat3.sym(np.asarray(z0, dtype=float))
    c = path.c
    panels = (dt / 6.0) * (c[0:-1:2] + 4.0 * c[1::2] + c[2::2])
    cum = np.concatenate((np.zeros((1, 3, 3)), np.cumsum(panels, axis=0)))
    b = np.eye(3) + cum @ z0
    dets = mat3.det3(b)
    b_inv = mat3.transpose(mat3.cofactor(b)) / dets[:, None, None]
    conds = np.sqrt(np.sum(b * b, axis=(-2, -1)) * np.sum(b_inv * b_inv, axis=(-2, -1)))
    finite = np.isfinite(b_inv).all(axis=(-2, -1))
    ok = (np.sign(dets) == np.sign(dets[0])) & (conds <= RICCATI_COND_LIMIT) & finite

    ts = path.t[::2]
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        z = mat3.sym(z0 @ b_inv)
        return RiccatiSolution(t=ts, z=z, status=COMPLETE)
    m = int(bad[0])
    z = mat3.sym(z0 @ b_inv[:m])
    return RiccatiSolution(
        t=ts[:m].copy(),
        z=z,
        status=BLOWN_UP,
        blowup_time=float(ts[m]),
        blowup_bracket=(float(ts[m - 1]), float(ts[m])) if m > 0 else (float(ts[0]),) * 2,
    )
