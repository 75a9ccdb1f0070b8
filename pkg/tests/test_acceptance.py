"""Acceptance gate: fourteen numbered criteria with pinned tolerances.

Each criterion is one test named test_criterion_NN_*, so the verbose pytest
listing gives one pass/fail line per criterion; each also prints a PASS line
with its measured figure for -s runs. Runtime-budgeted criteria time
themselves with perf_counter and fail when over budget.
"""

import time
from functools import lru_cache

import numpy as np

from rheo import mat3
from rheo.constitutive import (
    MaterialParams,
    NonlinearOldroydB,
    OldroydA,
    OldroydB,
    ZarembaJaumann,
    constitutive_residual,
    objective_derivative,
)
from rheo.integrate import (
    COMPLETE,
    analytic_planar_extension,
    analytic_planar_extension_energy_pairing,
    duhamel_oldroyd_b,
    integrate_eulerian,
    integrate_lagrangian,
    riccati_homogeneous,
)
from rheo.kinematics import (
    ConstantF,
    PlanarExtension,
    SimpleShear,
    frame_change,
    oscillatory_from_seed,
    sample,
)
from rheo.mat3 import trace_inequality_gap
from rheo.rng import SplitMix64
from rheo.thermo import audit, negative_dissipation_witness

FIG_PARAMS = MaterialParams(lambda1=10.0, eta_s=0.1, eta_p=1.9)
LINEAR_MODELS = (OldroydB(), ZarembaJaumann(), OldroydA())


def _passed(num: int, detail: str) -> None:
    print(f"[criterion {num:02d}] PASS  {detail}")


def _random_protocol(seed: int):
    gen = SplitMix64(seed ^ 0xA5A5)
    kind = seed % 4
    if kind == 0:
        return oscillatory_from_seed(seed, omega=0.3 + 1.2 * gen.uniform())
    if kind == 1:
        return SimpleShear(rate=0.2 + 0.8 * gen.uniform())
    if kind == 2:
        return PlanarExtension(rate=0.1 + 0.4 * gen.uniform())
    return ConstantF(f0=mat3.mat_exp(0.3 * gen.traceless_mat3()))


def test_criterion_01_trace_inequality():
    start = time.perf_counter()
    for seed in range(1000):
        gen = SplitMix64(seed)
        b = gen.psd_mat3()
        c = gen.psd_mat3()
        gap = trace_inequality_gap(b, c)
        assert gap >= -1e-9 * (1.0 + mat3.norm(b) + mat3.norm(c))
    sharp = trace_inequality_gap(np.eye(3), np.eye(3))
    assert sharp == 0.0
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _passed(1, f"1000 PSD pairs, sharp case exact, {elapsed:.2f} s")


def test_criterion_02_conditional_second_law():
    start = time.perf_counter()
    worst = np.inf
    for seed in range(200):
        protocol = _random_protocol(seed)
        xi0 = 0.5 * SplitMix64(10_000 + seed).psd_mat3()
        traj = integrate_lagrangian(OldroydB(), FIG_PARAMS, protocol, xi0, 40.0, 1e-2)
        report = audit(traj)
        assert report.first_negative_dissipation_time is None, f"seed {seed}"
        worst = min(worst, float(np.min(report.dissipation_eulerian)))
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _passed(2, f"200 runs, min dissipation {worst:.3e}, {elapsed:.1f} s")


def test_criterion_03_converse_necessity():
    start = time.perf_counter()
    found = 0
    seed = 0
    checked_protocol = 0
    while found < 50:
        xi0 = SplitMix64(seed).sym_mat3()
        seed += 1
        if mat3.sym_eigs(xi0)[0] >= -1e-6:
            continue
        found += 1
        f, h_ref, value = negative_dissipation_witness(OldroydB(), xi0, FIG_PARAMS)
        assert value < 0.0
        assert mat3.norm(h_ref) == 0.0
        assert abs(mat3.det3(f) - 1.0) < 1e-8
        if checked_protocol < 5:
            # Drive the frozen deformation as an actual protocol and audit it.
            traj = integrate_lagrangian(
                OldroydB(), FIG_PARAMS, ConstantF(f0=f), xi0, 0.1, 0.01
            )
            report = audit(traj)
            assert report.dissipation_eulerian[0] < 0.0
            checked_protocol += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _passed(3, f"50 indefinite starts all witnessed, {elapsed:.2f} s")


def test_criterion_04_planar_extension_closed_form():
    p = MaterialParams(lambda1=1.0, eta_s=0.1, eta_p=1.0, mu=1.0)
    starts = {
        "zero": np.zeros((3, 3)),
        "identity": np.eye(3),
        "random_psd": SplitMix64(4).psd_mat3(),
    }
    worst = 0.0
    for label, xi0 in starts.items():
        traj = integrate_lagrangian(
            OldroydB(), p, PlanarExtension(rate=1.0), xi0, 3.0, 1e-3
        )
        assert traj.status == COMPLETE
        for i in range(0, len(traj.t), 50):
            ana = analytic_planar_extension(xi0, p.eta_p, p.mu, traj.t[i])
            err = mat3.norm(traj.xi_ref[i] - ana) / (1.0 + mat3.norm(ana))
            worst = max(worst, err)
            assert err <= 1e-6, f"{label} at t={traj.t[i]}"
    # Cone exit in finite time for the identity start.
    late = analytic_planar_extension(np.eye(3), 1.0, 1.0, 5.0)
    assert mat3.sym_eigs(late)[0] < 0.0
    # The energy pairing stays nonnegative throughout regardless.
    for xi0 in starts.values():
        for t in np.linspace(0.0, 5.0, 501):
            pairing = analytic_planar_extension_energy_pairing(xi0, 1.0, 1.0, t)
            assert pairing >= -1e-9
    _passed(4, f"max relative error {worst:.2e}, cone exit confirmed at t=5")


def test_criterion_05_duhamel_vs_rk4():
    protocol = oscillatory_from_seed(0, omega=0.75)
    xi0 = np.zeros((3, 3))
    rk4 = integrate_lagrangian(OldroydB(), FIG_PARAMS, protocol, xi0, 40.0, 1e-3)
    duh = duhamel_oldroyd_b(FIG_PARAMS, protocol, xi0, 40.0, 1e-3)
    gap = float(np.max(np.abs(rk4.xi_ref - duh.xi_ref)))
    assert gap <= 1e-5
    _passed(5, f"max deviation {gap:.2e} over 40000 steps")


@lru_cache(maxsize=1)
def _figure_runs():
    start = time.perf_counter()
    runs = {}
    for model in LINEAR_MODELS:
        audits = []
        for seed in range(10):
            protocol = oscillatory_from_seed(seed, omega=0.75)
            traj = integrate_lagrangian(
                model, FIG_PARAMS, protocol, np.zeros((3, 3)), 40.0, 1e-2
            )
            assert traj.status == COMPLETE
            audits.append(audit(traj))
        runs[type(model).__name__] = audits
    return runs, time.perf_counter() - start


def test_criterion_06_figure_one_sign_structure():
    runs, build_seconds = _figure_runs()
    assert build_seconds < 30.0
    nonneg = [r.first_negative_dissipation_time is None for r in runs["OldroydB"]]
    assert all(nonneg)
    zj_neg = sum(r.first_negative_dissipation_time is not None for r in runs["ZarembaJaumann"])
    oa_neg = sum(r.first_negative_dissipation_time is not None for r in runs["OldroydA"])
    assert zj_neg >= 9
    assert oa_neg >= 9
    _passed(6, f"signs 10/10 nonneg, {zj_neg}/10 and {oa_neg}/10 negative, {build_seconds:.1f} s")


def test_criterion_07_figure_two_bounds():
    runs, _ = _figure_runs()
    floor = -FIG_PARAMS.eta_p / FIG_PARAMS.lambda1
    assert floor == -0.19
    lows = []
    for report in runs["OldroydB"]:
        low = float(np.min(report.min_eig_sigma_p))
        lows.append(low)
        assert low < 0.0  # the stress leaves the positive cone
        assert np.all(report.min_eig_sigma_p > floor)
    _passed(7, f"min eig in [{min(lows):.4f}, {max(lows):.4f}], floor {floor}")


def test_criterion_08_description_equivalence():
    models = (OldroydB(), NonlinearOldroydB(k=1), ZarembaJaumann(), OldroydA())
    worst_diss, worst_state = 0.0, 0.0
    for run, model in ((r, m) for r in range(5) for m in models):
        protocol = oscillatory_from_seed(run, omega=0.75)
        xi0 = 0.4 * SplitMix64(200 + run).psd_mat3()
        lag = integrate_lagrangian(model, FIG_PARAMS, protocol, xi0, 10.0, 1e-2)
        report = audit(lag)
        gap = np.abs(report.dissipation_lagrangian - report.dissipation_eulerian)
        rel = float(np.max(gap / (1.0 + np.abs(report.dissipation_eulerian))))
        worst_diss = max(worst_diss, rel)
        assert rel <= 1e-8

        eul = integrate_eulerian(
            model, FIG_PARAMS, protocol, FIG_PARAMS.mu * xi0, 10.0, 1e-2
        )
        pushed = FIG_PARAMS.mu * lag.f @ lag.xi_ref @ np.swapaxes(lag.f, -2, -1)
        diff = eul.sigma_p - pushed
        scale = 1.0 + np.sqrt(np.sum(pushed * pushed, axis=(-2, -1)))
        rel_state = float(np.max(np.sqrt(np.sum(diff * diff, axis=(-2, -1))) / scale))
        worst_state = max(worst_state, rel_state)
        assert rel_state <= 1e-6
    _passed(8, f"dissipation gap {worst_diss:.2e}, state gap {worst_state:.2e}, 20 runs")


def test_criterion_09_residual_second_order():
    protocols = [
        oscillatory_from_seed(0, omega=0.75),
        oscillatory_from_seed(1, omega=1.25),
        SimpleShear(rate=1.0),
        PlanarExtension(rate=0.5),
        frame_change(oscillatory_from_seed(2, omega=0.9), (1.0, 1.0, 0.0), 0.8),
    ]
    ratios = []
    for model in LINEAR_MODELS:
        for protocol in protocols:
            xi0 = 0.3 * SplitMix64(9).psd_mat3()

            def residual(dt):
                traj = integrate_lagrangian(model, FIG_PARAMS, protocol, xi0, 1.0, dt)
                return constitutive_residual(model, traj, len(traj) // 2, FIG_PARAMS)

            ratio = residual(2e-3) / residual(1e-3)
            ratios.append(ratio)
            assert 3.4 <= ratio <= 4.6, f"{type(model).__name__}/{type(protocol).__name__}"
    _passed(9, f"15 Richardson ratios in [{min(ratios):.2f}, {max(ratios):.2f}]")


def test_criterion_10_corotational_trace_law():
    worst = 0.0
    for run in range(20):
        gen = SplitMix64(300 + run)
        xi0 = gen.sym_mat3()
        if run % 2 == 0:
            xi0 = xi0 - (np.trace(xi0) / 3.0) * np.eye(3) + 0.7 * np.eye(3)  # nonzero trace
        protocol = oscillatory_from_seed(run, omega=0.75)
        traj = integrate_eulerian(ZarembaJaumann(), FIG_PARAMS, protocol, xi0, 10.0, 1e-2)
        report = audit(traj)
        expected = report.tr_xi[0] * np.exp(-traj.t / FIG_PARAMS.lambda1)
        err = float(np.max(np.abs(report.tr_xi - expected)))
        worst = max(worst, err)
        assert err <= 1e-6
    _passed(10, f"20 runs, max trace-law error {worst:.2e}")


def test_criterion_11_witness_families():
    count = 0
    for idx in range(100):
        gen = SplitMix64(400 + idx)
        xi0 = gen.psd_mat3() if idx < 50 else gen.sym_mat3()
        assert mat3.norm(xi0) > 0.0
        for model in (ZarembaJaumann(), OldroydA()):
            f, h_ref, value = negative_dissipation_witness(model, xi0, FIG_PARAMS)
            assert value < 0.0
            assert abs(mat3.det3(f) - 1.0) < 1e-8
            f_inv = mat3.transpose(mat3.cofactor(f))
            assert abs(np.trace(h_ref @ f_inv)) < 1e-8 * (1.0 + mat3.norm(h_ref))
            count += 1
    _passed(11, f"{count} witnesses (half PSD starts), all strictly negative")


def test_criterion_12_riccati_closed_form():
    p = MaterialParams(lambda1=1.0, mu=1.0, eta_p=0.0)
    z0 = np.diag([-1.0, 0.3, 0.0])
    sol = riccati_homogeneous(ConstantF(), z0, 0.9, 1e-3)
    traj = integrate_lagrangian(NonlinearOldroydB(k=1), p, ConstantF(), z0, 0.9, 1e-3)
    n = min(len(sol), len(traj))
    gap_const = float(np.max(np.abs(sol.z[:n] - traj.xi_ref[:n])))
    assert gap_const <= 1e-6

    protocol = oscillatory_from_seed(22, omega=0.75)
    z0_psd = 0.5 * SplitMix64(23).psd_mat3()
    sol_t = riccati_homogeneous(protocol, z0_psd, 2.0, 1e-3)
    traj_t = integrate_lagrangian(NonlinearOldroydB(k=1), p, protocol, z0_psd, 2.0, 1e-3)
    assert sol_t.status == COMPLETE
    gap_osc = float(np.max(np.abs(sol_t.z - traj_t.xi_ref)))
    assert gap_osc <= 1e-6

    dt = 1e-3
    blown = riccati_homogeneous(ConstantF(), np.diag([-1.0, 0.0, 0.0]), 2.0, dt)
    assert blown.status == "blown_up"
    assert abs(blown.blowup_time - 1.0) <= dt + 1e-12
    _passed(
        12,
        f"gaps {gap_const:.2e}/{gap_osc:.2e}, blow-up at {blown.blowup_time:.4f}",
    )


def test_criterion_13_odd_power_unconditional():
    model = NonlinearOldroydB(k=1)
    completed = 0
    for run in range(50):
        gen = SplitMix64(500 + run)
        xi0 = 0.4 * gen.sym_mat3()
        lo = mat3.sym_eigs(xi0)[0]
        if lo >= 0.0:
            xi0 = xi0 - (lo + 0.2) * np.eye(3)
        assert mat3.sym_eigs(xi0)[0] < 0.0
        protocol = oscillatory_from_seed(run, omega=0.75)
        traj = integrate_eulerian(model, FIG_PARAMS, protocol, xi0, 10.0, 1e-2)
        report = audit(traj)
        assert report.first_negative_dissipation_time is None, f"run {run}"
        completed += traj.status == COMPLETE
    _passed(13, f"50 non-PSD starts nonnegative throughout; {completed} ran to t=10")


def test_criterion_14_objectivity():
    # Transformation rule for the three rates under rotated-frame protocols.
    for seed in range(10):
        gen = SplitMix64(600 + seed)
        base = oscillatory_from_seed(seed, omega=0.75)
        axis = tuple(gen.uniform_signed() for _ in range(3))
        speed = 0.5 + gen.uniform()
        rotated = frame_change(base, axis, speed)
        t = 0.7
        plain = sample(base, t)
        starred = sample(rotated, t)
        q = starred.f @ mat3.inv3(plain.f)
        q_dot = (starred.h_ref - q @ plain.h_ref) @ mat3.inv3(plain.f)
        sig = gen.sym_mat3()
        sig_dot = gen.sym_mat3()
        sig_star = q @ sig @ q.T
        sig_dot_star = q_dot @ sig @ q.T + q @ sig_dot @ q.T + q @ sig @ q_dot.T
        for kind in ("corotational", "lower_convected", "upper_convected"):
            got = objective_derivative(kind, sig_dot_star, sig_star, starred.h)
            want = q @ objective_derivative(kind, sig_dot, sig, plain.h) @ q.T
            assert mat3.norm(got - want) <= 1e-8 * (1.0 + mat3.norm(want))

    # Trajectory-level closure: a rotated frame leaves the referential state
    # untouched and rotates the spatial stress.
    xi0 = 0.3 * SplitMix64(601).psd_mat3()
    for model in LINEAR_MODELS:
        for seed in (0, 1, 2):
            base = oscillatory_from_seed(seed, omega=0.75)
            rotated = frame_change(base, (0.0, 1.0, 1.0), 0.9)
            lag = integrate_lagrangian(model, FIG_PARAMS, base, xi0, 2.0, 1e-3)
            rot = integrate_lagrangian(model, FIG_PARAMS, rotated, xi0, 2.0, 1e-3)
            assert float(np.max(np.abs(rot.xi_ref - lag.xi_ref))) <= 1e-8
            qs = rot.f @ mat3.inv3(lag.f)
            pushed = qs @ lag.sigma_p @ np.swapaxes(qs, -2, -1)
            assert float(np.max(np.abs(rot.sigma_p - pushed))) <= 1e-8

    # Pulling back to the material frame, differencing, and pushing forward
    # reproduces the upper-convected rate at second order.
    p = MaterialParams(lambda1=2.0, eta_s=0.2, eta_p=1.0, mu=1.4)
    protocol = oscillatory_from_seed(27, omega=0.75)
    xi0 = SplitMix64(28).sym_mat3()

    def mismatch(dt):
        traj = integrate_lagrangian(OldroydB(), p, protocol, xi0, 1.0, dt)
        i = len(traj) // 2
        f_inv = mat3.inv3(traj.f)
        pulled = f_inv @ traj.sigma_p @ np.swapaxes(f_inv, -2, -1)
        pulled_dot = (pulled[i + 1] - pulled[i - 1]) / (2.0 * dt)
        lhs = traj.f[i] @ pulled_dot @ traj.f[i].T
        sig_dot = (traj.sigma_p[i + 1] - traj.sigma_p[i - 1]) / (2.0 * dt)
        rhs = objective_derivative(
            "upper_convected", sig_dot, traj.sigma_p[i], traj.h[i]
        )
        return mat3.norm(lhs - rhs)

    m2 = mismatch(2e-3)
    ratio = m2 / mismatch(1e-3)
    assert m2 <= 1e-3
    assert 3.0 <= ratio <= 5.5
    _passed(14, f"rates transform, frames commute, pullback ratio {ratio:.2f}")
