"""Prescribed homogeneous deformations and derived kinematic fields.

A motion protocol describes a time-dependent deformation gradient F(t) with
det F = 1 and its rate H(t) = dF/dt. All protocols here have closed forms,
so sampling is exact up to the matrix exponential's truncation error and no
drift control is needed. Batched sampling over a whole time grid is the fast
path the integrators use.

Velocity-gradient conventions: h = H F^-1, d = sym(h), w = skew(h),
C = F^T F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mat3
from .rng import SplitMix64

_E12 = np.zeros((3, 3))
_E12[0, 1] = 1.0

DET_DRIFT_TOL = 1e-6


def _as_mat(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    return a


@dataclass
class ConstantF:
    """Frozen deformation: F(t) = f0, H = 0."""

    f0: np.ndarray = field(default_factory=lambda: np.eye(3))
    t0: float = 0.0

    def __post_init__(self):
        self.f0 = _as_mat(self.f0)
        if abs(mat3.det3(self.f0) - 1.0) > 1e-8:
            raise ValueError("f0 must have unit determinant")

    def f_and_h(self, t: float):
        return self.f0.copy(), np.zeros((3, 3))

    def f_and_h_path(self, ts: np.ndarray):
        n = len(ts)
        return np.broadcast_to(self.f0, (n, 3, 3)).copy(), np.zeros((n, 3, 3))


@dataclass
class PlanarExtension:
    """Planar stretch F(t) = diag(e^{a(t-t0)}, e^{-a(t-t0)}, 1)."""

    rate: float = 1.0
    t0: float = 0.0

    def f_and_h(self, t: float):
        a = self.rate
        ep = math.exp(a * (t - self.t0))
        f = np.diag([ep, 1.0 / ep, 1.0])
        h = np.diag([a * ep, -a / ep, 0.0])
        return f, h

    def f_and_h_path(self, ts: np.ndarray):
        a = self.rate
        ep = np.exp(a * (ts - self.t0))
        n = len(ts)
        f = np.zeros((n, 3, 3))
        hh = np.zeros((n, 3, 3))
        f[:, 0, 0] = ep
        f[:, 1, 1] = 1.0 / ep
        f[:, 2, 2] = 1.0
        hh[:, 0, 0] = a * ep
        hh[:, 1, 1] = -a / ep
        return f, hh


@dataclass
class SimpleShear:
    """Shear F(t) = I + gdot (t-t0) E12; unit determinant exactly."""

    rate: float = 1.0
    t0: float = 0.0

    def f_and_h(self, t: float):
        f = np.eye(3) + self.rate * (t - self.t0) * _E12
        return f, self.rate * _E12.copy()

    def f_and_h_path(self, ts: np.ndarray):
        n = len(ts)
        f = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        f[:, 0, 1] = self.rate * (ts - self.t0)
        h = np.broadcast_to(self.rate * _E12, (n, 3, 3)).copy()
        return f, h


@dataclass
class OscillatoryEuler:
    """Spatial velocity gradient h(t) = cos(omega t) m with m traceless.

    Because h(t) is a scalar multiple of one fixed matrix, the flow map is
    the exact exponential F(t) = exp(g(t) m) with
    g(t) = (sin(omega t) - sin(omega t0)) / omega (g = t - t0 when omega
    is zero). det F = exp(g tr m) = 1 because tr m = 0 exactly.
    """

    m: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    omega: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        self.m = _as_mat(self.m)
        if self.m[0, 0] + self.m[1, 1] + self.m[2, 2] != 0.0:
            raise ValueError("m must be traceless (exactly, in floating point)")
        if self.omega < 0.0:
            raise ValueError("omega must be nonnegative")

    def _g(self, t):
        if self.omega == 0.0:
            return t - self.t0
        return (np.sin(self.omega * t) - math.sin(self.omega * self.t0)) / self.omega

    def f_and_h(self, t: float):
        f = mat3.mat_exp(float(self._g(t)) * self.m)
        h = math.cos(self.omega * t) * self.m
        return f, h @ f

    def f_and_h_path(self, ts: np.ndarray):
        g = np.asarray(self._g(ts), dtype=float)
        f = mat3.mat_exp_batch(g[:, None, None] * self.m)
        h = np.cos(self.omega * ts)[:, None, None] * self.m
        return f, h @ f


@dataclass
class Extended:
    """Continuation past t1 with prescribed curvature.

    For t <= t1 the motion agrees with the base exactly. Past t1 the base
    deformation is premultiplied by E(t) = exp(tau^2 M), tau = t - t1, so
    value and velocity are continuous at t1 and the second time derivative
    jumps by 2 M F(t1). M must be traceless so determinants stay at one.
    """

    base: object
    t1: float
    m: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        self.m = _as_mat(self.m)
        if abs(self.m[0, 0] + self.m[1, 1] + self.m[2, 2]) > 1e-8:
            raise ValueError("extension matrix must be traceless within 1e-8")

    @property
    def t0(self) -> float:
        return self.base.t0

    def f_and_h(self, t: float):
        f, h = self.base.f_and_h(t)
        tau = t - self.t1
        if tau <= 0.0:
            return f, h
        e = mat3.mat_exp(tau * tau * self.m)
        return e @ f, 2.0 * tau * (self.m @ e @ f) + e @ h

    def f_and_h_path(self, ts: np.ndarray):
        f, h = self.base.f_and_h_path(ts)
        tau = np.maximum(np.asarray(ts, dtype=float) - self.t1, 0.0)
        if not np.any(tau > 0.0):
            return f, h
        e = mat3.mat_exp_batch((tau * tau)[:, None, None] * self.m)
        ef = e @ f
        return ef, 2.0 * tau[:, None, None] * (self.m @ ef) + e @ h


@dataclass
class RotatedFrame:
    """Base motion observed from a rotating frame: F* = Q(t) F.

    Q(t) = exp(speed * t * K) with K the generator of rotations about the
    axis. Constructed through frame_change(); the angle is measured in
    absolute time so speed zero gives Q = I identically.
    """

    base: object
    axis: np.ndarray
    speed: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        nrm = float(np.sqrt(axis @ axis))
        if nrm == 0.0:
            raise ValueError("axis must be a nonzero vector")
        self.axis = axis / nrm
        # K v = axis x v
        x, y, z = self.axis
        self._k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])

    @property
    def t0(self) -> float:
        return self.base.t0

    def f_and_h(self, t: float):
        f, h = self.base.f_and_h(t)
        q = mat3.mat_exp(self.speed * t * self._k)
        return q @ f, self.speed * (self._k @ q @ f) + q @ h

    def f_and_h_path(self, ts: np.ndarray):
        f, h = self.base.f_and_h_path(ts)
        q = mat3.mat_exp_batch(self.speed * np.asarray(ts, dtype=float)[:, None, None] * self._k)
        qf = q @ f
        return qf, self.speed * (self._k @ qf) + q @ h


@dataclass
class KinematicSample:
    """All kinematic fields of a protocol at one instant."""

    t: float
    f: np.ndarray
    h_ref: np.ndarray  # dF/dt, referential rate
    h: np.ndarray  # spatial velocity gradient h_ref F^-1
    d: np.ndarray  # sym(h)
    w: np.ndarray  # skew(h)
    c: np.ndarray  # F^T F
    c_dot: np.ndarray
    c_inv: np.ndarray
    c_inv_dot: np.ndarray


@dataclass
class PathSample:
    """Kinematic fields stacked over a time grid, one leading axis."""

    t: np.ndarray
    f: np.ndarray
    h_ref: np.ndarray
    h: np.ndarray
    d: np.ndarray
    w: np.ndarray
    c: np.ndarray
    c_dot: np.ndarray
    c_inv: np.ndarray
    c_inv_dot: np.ndarray


def sample(p, t: float) -> KinematicSample:
    """Evaluate a protocol and every derived field at time t.

    Raises ValueError if t precedes the protocol start or if the sampled
    deformation gradient's determinant has drifted from one by more than
    1e-6.
    """
    if t < p.t0:
        raise ValueError(f"t={t} precedes protocol start t0={p.t0}")
    f, h_ref = p.f_and_h(t)
    if abs(mat3.det3(f) - 1.0) > DET_DRIFT_TOL:
        raise ValueError("deformation gradient lost unit determinant")
    f_inv = mat3.transpose(mat3.cofactor(f))  # det = 1
    h = h_ref @ f_inv
    d = mat3.sym(h)
    w = h - d
    c = f.T @ f
    c_dot = f.T @ h_ref + h_ref.T @ f
    c_inv = f_inv @ f_inv.T
    c_inv_dot = -c_inv @ c_dot @ c_inv
    return KinematicSample(t, f, h_ref, h, d, w, c, c_dot, c_inv, c_inv_dot)


def sample_path(p, ts) -> PathSample:
    """Vectorized sample() over a time grid (the integrators' fast path)."""
    ts = np.asarray(ts, dtype=float)
    if ts.size and ts.min() < p.t0:
        raise ValueError("grid extends before protocol start")
    f, h_ref = p.f_and_h_path(ts)
    det = mat3.det3(f)
    if det.size and float(np.max(np.abs(det - 1.0))) > DET_DRIFT_TOL:
        raise ValueError("deformation gradient lost unit determinant")
    f_inv = mat3.transpose(mat3.cofactor(f))
    h = h_ref @ f_inv
    d = mat3.sym(h)
    w = h - d
    ft = mat3.transpose(f)
    c = ft @ f
    c_dot = ft @ h_ref + mat3.transpose(h_ref) @ f
    c_inv = f_inv @ mat3.transpose(f_inv)
    c_inv_dot = -c_inv @ c_dot @ c_inv
    return PathSample(ts, f, h_ref, h, d, w, c, c_dot, c_inv, c_inv_dot)


def extension_matrix(f1, gamma1, gamma_star) -> np.ndarray:
    """Curvature matrix M = (Gamma* - Gamma1) cof(F1)^T / 2 for Extended.

    f1 is the deformation gradient at the splice time, gamma1 the base
    motion's d2F/dt2 there, gamma_star the prescribed one. gamma_star must
    be tangent to the unit-determinant constraint at f1, cof(F1):Gamma* = 0.
    The result is traceless whenever gamma1 satisfies the same tangency,
    and is checked to be so within 1e-8.
    """
    f1 = _as_mat(f1)
    gamma1 = _as_mat(gamma1)
    gamma_star = _as_mat(gamma_star)
    if abs(mat3.det3(f1) - 1.0) > 1e-8:
        raise ValueError("f1 must have unit determinant within 1e-8")
    cof = mat3.cofactor(f1)
    if abs(mat3.frobenius(cof, gamma_star)) > 1e-8:
        raise ValueError("gamma_star must satisfy cof(f1):gamma_star = 0 within 1e-8")
    m = 0.5 * (gamma_star - gamma1) @ cof.T
    if abs(np.trace(m)) > 1e-8:
        raise ValueError("resulting extension matrix is not traceless within 1e-8")
    return m


def frame_change(p, axis, speed: float) -> RotatedFrame:
    """The same motion watched from a frame rotating about axis at speed."""
    return RotatedFrame(p, np.asarray(axis, dtype=float), float(speed))


def oscillatory_from_seed(seed: int, omega: float = 0.75, t0: float = 0.0) -> OscillatoryEuler:
    """Oscillatory protocol with m drawn from the seeded generator.

    Entries of m are uniform in [-1, 1) before the traceless projection.
    """
    return OscillatoryEuler(m=SplitMix64(seed).traceless_mat3(), omega=omega, t0=t0)
