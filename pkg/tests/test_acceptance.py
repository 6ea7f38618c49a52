"""End-to-end acceptance battery.

Each test covers one numbered acceptance criterion and prints a single
PASS/FAIL line (straight to the real stdout so it survives capture).  The
tolerances are pinned; where a constant was calibrated empirically the
printed line reports the measured value next to the pinned bound.
"""

import math
import time

import numpy as np
import pytest
from scipy import linalg as sla

from hilfersolve.existence import Constants, check_existence, compute_constants
from hilfersolve.fracops import (
    PiecewiseTrajectory,
    SampledFn,
    hilfer_derivative,
    rl_integral,
)
from hilfersolve.operators import (
    GeneratorMatrix,
    resolvent_property_check,
    theta_quadrature,
)
from hilfersolve.solver import (
    Impulse,
    ProblemSpec,
    SolverConfig,
    mild_solve,
)
from hilfersolve.specfun import gamma as gamma_fn
from hilfersolve.specfun import mittag_leffler
from hilfersolve.verifier import integral_residual
from oracles import adams_pece_caputo, ml_reference, rk4


# one line per criterion; echoed by the conftest terminal-summary hook so
# they appear even under pytest's fd-level capture
CRITERION_LINES = []


def report(criterion, ok, detail):
    line = f"[criterion {criterion:2d}] {'PASS' if ok else 'FAIL'}: {detail}"
    CRITERION_LINES.append(line)
    print(line, flush=True)
    assert ok, line


def scalar(alpha, beta, lam=1.0, u0=1.0, horizon=1.0, **kw):
    return ProblemSpec(
        alpha, beta, GeneratorMatrix(np.array([[lam]])), np.array([u0]),
        horizon, **kw
    )


def test_criterion_01_homogeneous_oracle():
    """Scalar homogeneous solves match t^(g-1) E_{a,g}(-l t^a) u0."""
    worst = 0.0
    slowest = 0.0
    for a in (0.4, 0.7):
        for b in (0.0, 0.5, 1.0):
            for lam in (0.5, 2.0):
                g = a + b * (1.0 - a)
                t0 = time.perf_counter()
                traj = mild_solve(scalar(a, b, lam)).trajectory
                seg = traj.segments[0]
                idx = np.nonzero(seg.grid >= 0.05)[0][::12]
                exact = np.array(
                    [
                        t ** (g - 1.0) * ml_reference(a, g, -lam * t**a)
                        for t in seg.grid[idx]
                    ]
                )
                rel = np.max(
                    np.abs(seg.values[idx, 0] - exact) / np.abs(exact)
                )
                worst = max(worst, rel)
                slowest = max(slowest, time.perf_counter() - t0)
    report(
        1,
        worst < 1e-4 and slowest < 10.0,
        f"12 (alpha,beta,lambda) cases, worst rel err {worst:.2e} "
        f"(tol 1e-4), slowest case {slowest:.1f}s (limit 10s)",
    )


def test_criterion_02_limit_consistency():
    """beta=1 matches a fractional Adams PECE oracle; alpha=1 matches RK4."""
    p = scalar(0.6, 1.0, f=lambda t, u: np.array([math.sin(t)]))
    seg = mild_solve(p).trajectory.segments[0]
    ts, us = adams_pece_caputo(
        0.6, lambda t, u: -u + np.sin(t), [1.0], 1.0, 2000
    )
    err_frac = float(
        np.max(np.abs(seg.values[:, 0] - np.interp(seg.grid, ts, us[:, 0])))
    )

    p1 = scalar(1.0, 1.0, f=lambda t, u: np.array([math.sin(t)]))
    seg1 = mild_solve(
        p1, SolverConfig(points_per_interval=640)
    ).trajectory.segments[0]
    tsr, usr = rk4(lambda t, u: -u + np.sin(t), [1.0], 1.0, 4000)
    err_ode = float(
        np.max(np.abs(seg1.values[:, 0] - np.interp(seg1.grid, tsr, usr[:, 0])))
    )
    report(
        2,
        err_frac < 1e-3 and err_ode < 1e-6,
        f"Caputo case vs Adams PECE {err_frac:.2e} (tol 1e-3); "
        f"classical case vs RK4 {err_ode:.2e} (tol 1e-6)",
    )


def test_criterion_03_wright_moments():
    """Quadrature of M and theta*M reproduces the moment identity."""
    worst = 0.0
    for a in (0.3, 0.5, 0.7, 0.9):
        q = theta_quadrature(a)
        for delta in (0.0, 1.0):
            got = float(np.sum(q.weights * q.m_values * q.nodes**delta))
            expect = gamma_fn(1.0 + delta) / gamma_fn(1.0 + a * delta)
            worst = max(worst, abs(got - expect))
    report(
        3,
        worst < 1e-6,
        f"moments delta in {{0,1}}, alpha in {{0.3,0.5,0.7,0.9}}, "
        f"worst defect {worst:.2e} (tol 1e-6)",
    )


def test_criterion_04_operator_battery():
    """RL power rule, Hilfer annihilation, beta-endpoint reductions."""
    ts = np.linspace(1e-3, 1.0, 2000)
    # RL power rule I^0.5 t = Gamma(2)/Gamma(2.5) t^1.5
    out = rl_integral(0.5, SampledFn(ts, ts))
    e_rl = float(
        np.max(np.abs(out.values[:, 0] - ts**1.5 / gamma_fn(2.5)))
    )
    # Hilfer derivative annihilates t^(g-1)
    a, b = 0.6, 0.5
    g = a + b * (1.0 - a)
    dv = hilfer_derivative(
        a, b, SampledFn(ts, ts ** (g - 1.0)), singular_exponent=g - 1.0
    )
    interior = (ts > 0.05) & (ts < 0.95)
    e_ann = float(np.max(np.abs(dv.values[interior, 0])))
    # beta = 0 reduces to RL: D^{0.5,0} t = t^0.5/Gamma(1.5)
    d_rl = hilfer_derivative(0.5, 0.0, SampledFn(ts, ts))
    e_b0 = float(
        np.max(
            np.abs(d_rl.values[interior, 0] - ts[interior] ** 0.5 / gamma_fn(1.5))
        )
    )
    # beta = 1 reduces to Caputo: D^{0.7,1} t^2 = 2 t^1.3/Gamma(2.3)
    d_c = hilfer_derivative(0.7, 1.0, SampledFn(ts, ts**2))
    e_b1 = float(
        np.max(
            np.abs(
                d_c.values[interior, 0]
                - 2.0 * ts[interior] ** 1.3 / gamma_fn(2.3)
            )
        )
    )
    report(
        4,
        e_rl < 1e-4 and e_ann < 1e-6 and e_b0 < 1e-5 and e_b1 < 1e-5,
        f"power rule {e_rl:.2e} (1e-4), annihilation {e_ann:.2e} (1e-6), "
        f"RL endpoint {e_b0:.2e}, Caputo endpoint {e_b1:.2e} (1e-5)",
    )


def test_criterion_05_integral_equation_equivalence():
    """Converged solves satisfy the integral equation; fakes do not.

    The quadrature term of the bound is C*h with C = 0.5 pinned from
    measurement (the forced residual is dominated by the first-node
    product-integration error, which scales like h here).
    """
    p = scalar(0.5, 0.5, f=("-0.5 * u1 + sin(t)",))
    ok = True
    measured = []
    for ppi in (160, 320):
        cfg = SolverConfig(points_per_interval=ppi)
        res = integral_residual(p, mild_solve(p, cfg).trajectory)
        h = p.horizon / ppi
        bound = 50.0 * cfg.picard_tol + 0.5 * h
        measured.append((res.max_residual, bound, res.max_residual / h))
        ok = ok and res.max_residual <= bound

    # injected exact trajectory passes
    pe = scalar(0.6, 0.5)
    g = pe.gamma
    tse = (np.arange(1, 401) / 400.0) ** 2
    vals = np.array(
        [[t ** (g - 1.0) * mittag_leffler(0.6, g, -t**0.6)] for t in tse]
    )
    exact = PiecewiseTrajectory(
        (SampledFn(tse, vals),), g, pe.partition(), ("evolution",)
    )
    r_exact = integral_residual(pe, exact).max_residual
    bad = PiecewiseTrajectory(
        (SampledFn(tse, vals + 0.1 * tse[:, None]),),
        g, pe.partition(), ("evolution",),
    )
    r_bad = integral_residual(pe, bad).max_residual
    ok = ok and r_exact < 1e-4 and r_bad >= 0.05
    report(
        5,
        ok,
        "converged residuals "
        + ", ".join(f"{r:.1e}<={b:.1e} (C_meas={c:.2f})" for r, b, c in measured)
        + f"; injected exact {r_exact:.1e} (<1e-4), "
        f"perturbed {r_bad:.2f} (>=0.05)",
    )


def test_criterion_06_kernel_exponent_arbitration():
    """The alpha-1 kernel exponent wins the residual contest by >= 10x."""
    worst_ratio = math.inf
    for a, b in ((0.6, 0.5), (0.4, 1.0)):
        p = scalar(a, b)
        r_alpha = integral_residual(
            p,
            mild_solve(
                p, SolverConfig(points_per_interval=160)
            ).trajectory,
        ).max_residual
        r_gamma = integral_residual(
            p,
            mild_solve(
                p,
                SolverConfig(
                    points_per_interval=160, kernel_exponent="gamma"
                ),
            ).trajectory,
        ).max_residual
        worst_ratio = min(worst_ratio, r_gamma / r_alpha)
    report(
        6,
        worst_ratio >= 10.0,
        f"residual ratio gamma-exponent / alpha-exponent >= "
        f"{worst_ratio:.0f}x (required 10x)",
    )


# (M, K, L, Lambda, rho, expected paper verdict, expected derivation verdict)
_HAND_CASES = [
    (1.0, 0.0, 0.00, 0.0, 0.0, "PASS", "PASS"),   # 0 < 1
    (1.0, 0.3, 0.10, 0.0, 0.0, "PASS", "PASS"),   # 0.42 / 0.7
    (1.0, 0.5, 0.25, 0.0, 0.0, "FAIL", "FAIL"),   # 1.0 (equality) / 1.5
    (2.0, 0.3, 0.10, 0.0, 0.0, "PASS", "FAIL"),   # 0.84 / 1.4
    (1.0, 0.1, 0.21, 0.0, 0.0, "PASS", "PASS"),   # 0.184 / 0.94
    (1.0, 0.1, 0.23, 0.0, 0.0, "PASS", "FAIL"),   # 0.192 / 1.02
    (1.2, 0.1, 0.10, 2.0, 0.4, "FAIL", "FAIL"),   # 1.08 / 1.08
    (1.0, 0.0, 0.20, 1.0, 0.5, "PASS", "PASS"),   # 0.5 / 0.8
    (3.0, 0.2, 0.00, 0.0, 0.0, "PASS", "PASS"),   # 0.6 / 0.6
    (1.0, 0.9, 0.05, 0.5, 0.1, "FAIL", "FAIL"),   # 1.08 / 1.1
]


def test_criterion_07_existence_criterion():
    """Hand verdicts, monotonicity, and contraction on certified problems."""
    hand_ok = True
    for M, K, L, Lam, rho, vp, vd in _HAND_CASES:
        cert = check_existence(Constants(M, K, Lam, L, rho, {}))
        hand_ok = hand_ok and (cert.verdict_paper, cert.verdict_derivation) == (
            vp, vd
        )

    rng = np.random.default_rng(2024)
    mono_ok = True
    for _ in range(1000):
        M = 1.0 + 2.0 * rng.random()
        K, Lam, L, rho = rng.random(4)
        lo = check_existence(Constants(M, K, Lam, L, rho, {}))
        bump = 0.5 * rng.random(5)
        hi = check_existence(
            Constants(
                M + bump[0], K + bump[1], Lam + bump[2], L + bump[3],
                rho + bump[4], {},
            )
        )
        if lo.verdict == "FAIL" and hi.verdict == "PASS":
            mono_ok = False
            break

    # certified-PASS random scalar problems contract in practice
    cfg = SolverConfig(points_per_interval=64)
    contract_ok = True
    n_runs = 0
    draws = 0
    while n_runs < 50 and draws < 500:
        draws += 1
        a = (0.5, 0.7)[draws % 2]
        b = (0.0, 0.5, 1.0)[draws % 3]
        lam = 0.5 + 1.5 * rng.random()
        c = -0.3 + 0.6 * rng.random()
        p = scalar(
            a, b, lam,
            f=(f"{c} * u1",), phi=lambda t: 1.0, rho=abs(c),
            lipschitz_f=abs(c),
        )
        cert = check_existence(compute_constants(p))
        if cert.verdict != "PASS":
            continue
        n_runs += 1
        rep = mild_solve(p, cfg)
        ratios = [r for seg in rep.contraction_ratios for r in seg]
        if ratios and max(ratios) >= 1.0:
            contract_ok = False
    report(
        7,
        hand_ok and mono_ok and contract_ok and n_runs == 50,
        f"10 hand verdicts {'exact' if hand_ok else 'WRONG'}; monotone in "
        f"1000 trials: {mono_ok}; contraction ratio < 1 on "
        f"{n_runs}/50 certified-PASS solves: {contract_ok}",
    )


def test_criterion_08_semigroup_resolvent():
    """Semigroup law on random generators; resolvent identity defect."""
    rng = np.random.default_rng(5)
    worst_sg = 0.0
    for _ in range(5):
        B = rng.standard_normal((4, 4))
        B *= 2.0 / np.linalg.norm(B, 2)
        t, s = 0.31, 0.47
        defect = np.max(
            np.abs(
                sla.expm(-B * (t + s)) - sla.expm(-B * t) @ sla.expm(-B * s)
            )
        )
        worst_sg = max(worst_sg, float(defect))

    q = theta_quadrature(0.5)
    grid = np.linspace(0.01, 1.0, 2000)
    defect_res = resolvent_property_check(
        GeneratorMatrix(np.array([[1.0]])), 0.5, grid, q
    )
    report(
        8,
        worst_sg <= 1e-10 and defect_res <= 5e-4,
        f"semigroup law defect {worst_sg:.1e} (tol 1e-10); resolvent "
        f"identity defect {defect_res:.1e} (tol 5e-4)",
    )


def test_criterion_09_impulse_handling():
    """Two affine impulse windows: window equation and causality."""
    cfg = SolverConfig(points_per_interval=96, impulse_points=16)

    def problem(f):
        return scalar(
            0.5, 0.5, f=f,
            impulses=(
                Impulse(0.2, 0.3, ("0.4 * u1 + 0.1",), k_zeta=0.4),
                Impulse(0.6, 0.7, ("0.3 * u1 - 0.05",), k_zeta=0.3),
            ),
        )

    base = problem(("-u1 + sin(t)",))
    traj = mild_solve(base, cfg).trajectory
    worst = 0.0
    for i, coeffs in ((1, (0.4, 0.1)), (3, (0.3, -0.05))):
        seg = traj.segments[i]
        z = coeffs[0] * seg.values[:, 0] + coeffs[1]
        worst = max(worst, float(np.max(np.abs(seg.values[:, 0] - z))))

    bumped = problem(("-u1 + sin(t) + 5 * max(t - 0.75, 0)",))
    traj_b = mild_solve(bumped, cfg).trajectory
    causal = all(
        np.array_equal(traj.segments[i].values, traj_b.segments[i].values)
        for i in range(4)  # all segments before the bump at t = 0.75
    )
    report(
        9,
        worst <= 10.0 * cfg.picard_tol and causal,
        f"impulse equation defect {worst:.1e} (tol {10 * cfg.picard_tol:.0e}); "
        f"causality bit-for-bit: {causal}",
    )


def test_criterion_10_cli_round_trip(tmp_path):
    """solve -> verify exits 0; outputs are byte-deterministic."""
    from hilfersolve.cli import main

    config = tmp_path / "prob.toml"
    config.write_text(
        "schema_version = 1\n"
        "[problem]\nalpha = 0.5\nbeta = 0.5\ndimension = 1\n"
        "A = [1.0]\nu0 = [1.0]\nhorizon = 1.0\n"
        '[forcing]\nf = ["-0.1 * u1 + sin(t)"]\nphi = "0.5"\n'
        "rho = 0.1\nlipschitz = 0.1\n"
        "[[impulse]]\nt_k = 0.3\ns_k = 0.4\n"
        'zeta = ["0.2 * u1 + 0.2"]\nK_zeta = 0.2\n'
        "[solver]\npoints_per_interval = 96\nimpulse_points = 16\n"
        "[checker]\nresidual_tolerance = 5e-3\n"
    )
    out_a = str(tmp_path / "a.csv")
    out_b = str(tmp_path / "b.csv")
    code_solve = main(["solve", "--config", str(config), "--out", out_a])
    code_verify = main(["verify", "--config", str(config), "--traj", out_a])
    main(["solve", "--config", str(config), "--out", out_b])
    same = open(out_a, "rb").read() == open(out_b, "rb").read()
    report(
        10,
        code_solve == 0 and code_verify == 0 and same,
        f"solve exit {code_solve}, verify exit {code_verify}, "
        f"byte-identical re-run: {same}",
    )
