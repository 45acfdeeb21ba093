"""Acceptance suite: one pass/fail line per criterion (run with pytest -s).

All criteria are property-based at desk scale over seeded random system
sweeps; tolerances are fixed here and nowhere else.
"""

import time

import numpy as np
import pytest

from kypcert import (
    PeriodicSystem,
    STRICTLY_CONTRACTIVE_CERTIFIED,
    NOT_CONTRACTIVE,
    bicausal_kyp_residual,
    build_gramians,
    build_laurent,
    build_quadruple,
    certify_standard,
    certify_strict,
    compute_Ha,
    compute_Hr,
    dichotomy_split,
    dissipation_residuals,
    hinf_norm,
    kyp_residual,
    map_states,
    simulate,
    solve_tv_kyp,
    split_state_space,
    to_bicausal,
    tv_kyp_residuals,
)

from conftest import random_dichotomous, scaled_to_hinf

SEED = 7102025  # fixed sweep seed


def _line(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {num:2d}] {status} {name}" + (f"  ({detail})" if detail else ""))
    assert ok, f"criterion {num} ({name}): {detail}"


def _sweep_system(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 4))
    p = int(rng.integers(1, 4))
    target = float(rng.uniform(0.3, 0.95))
    sys = random_dichotomous(rng, n=n, m=m, p=p, margin=0.3)
    return scaled_to_hinf(sys, target)


@pytest.fixture(scope="module")
def sweep():
    rng = np.random.default_rng(SEED)
    systems = [_sweep_system(rng) for _ in range(200)]
    certify_strict(systems[0])  # warm the jit kernels outside the timer
    t0 = time.perf_counter()
    reports = [certify_strict(s) for s in systems]
    elapsed = time.perf_counter() - t0
    return systems, reports, elapsed


def test_criterion_1_brl_soundness_sweep(sweep):
    systems, reports, elapsed = sweep
    worst = np.inf
    ok = True
    for sys, rep in zip(systems, reports):
        if rep.verdict != STRICTLY_CONTRACTIVE_CERTIFIED:
            ok = False
            break
        eps = np.sqrt(rep.certificate.strict_margin)
        R = kyp_residual(sys, rep.certificate.pullback(), eps)
        worst = min(worst, np.linalg.eigvalsh(R).min())
        if worst < -1e-7:
            ok = False
            break
    ok = ok and elapsed <= 60.0
    _line(1, "BRL soundness sweep (200 systems)", ok,
          f"min residual {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_inertia_theorem(sweep):
    systems, reports, _ = sweep
    failures = 0
    for sys, rep in zip(systems, reports):
        dec = dichotomy_split(sys)
        if rep.certificate.inertia != (dec.dim_plus, dec.dim_minus, 0):
            failures += 1
    _line(2, "inertia matches the spectral split in every certified case",
          failures == 0, f"{failures} failures")


def test_criterion_3_extremal_ordering():
    rng = np.random.default_rng(SEED + 3)
    worst_gap = np.inf
    worst_combo = np.inf
    for _ in range(50):
        n = int(rng.integers(1, 5))
        sys = scaled_to_hinf(
            random_dichotomous(rng, n=n, m=2, p=2, margin=0.3),
            float(rng.uniform(0.4, 0.9)))
        dec = dichotomy_split(sys)
        h = hinf_norm(dec)
        ca = compute_Ha(dec, hinf=h)
        cr = compute_Hr(dec, hinf=h)
        worst_gap = min(worst_gap, np.linalg.eigvalsh(cr.H - ca.H).min())
        ss = split_state_space(dec)
        for lam in (0.25, 0.5, 0.75):
            R = kyp_residual(ss, lam * ca.H + (1 - lam) * cr.H)
            worst_combo = min(worst_combo, np.linalg.eigvalsh(R).min())
    ok = worst_gap >= -1e-6 and worst_combo >= -1e-6
    _line(3, "extremal ordering H_a <= H_r and convex combinations certify", ok,
          f"min eig(Hr-Ha) {worst_gap:.2e}, min combo residual {worst_combo:.2e}")


def test_criterion_4_hankel_factorization():
    rng = np.random.default_rng(SEED + 4)
    worst = -np.inf
    N = 128
    for _ in range(50):
        n = int(rng.integers(1, 7))
        sys = random_dichotomous(rng, n=n, m=int(rng.integers(1, 4)),
                                 p=int(rng.integers(1, 4)), margin=0.25)
        dec = dichotomy_split(sys)
        q = build_quadruple(dec, N)
        g = build_gramians(dec, N)
        tail = q.window.tail_bound
        e1 = np.linalg.norm(q.H - g.WoPlus @ g.WcPlus) - tail
        e2 = np.linalg.norm(q.Htilde - g.WoMinus @ g.WcMinus) - tail
        worst = max(worst, e1, e2)
    _line(4, "Hankel factorizations within the tail bound at N=128",
          worst <= 0.0, f"worst excess {worst:.2e}")


def test_criterion_5_laurent_simulation_equivalence():
    rng = np.random.default_rng(SEED + 5)
    worst = -np.inf
    for _ in range(50):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 4))
        p = int(rng.integers(1, 4))
        sys = scaled_to_hinf(random_dichotomous(rng, n=n, m=m, p=p, margin=0.3),
                             float(rng.uniform(0.4, 1.5)))
        dec = dichotomy_split(sys)
        u = rng.normal(size=(16, m)) + 1j * rng.normal(size=(16, m))
        traj = simulate(dec, u, n0=-8, tol=1e-11)
        from kypcert import laurent_slice

        sl = laurent_slice(dec, 64)
        N = 64
        L = build_laurent(dec, N)
        uu = np.zeros(2 * N * m, dtype=complex)
        uu[(N - 8) * m:(N + 8) * m] = u.reshape(-1)
        yy = (L @ uu).reshape(2 * N, p)
        ys = np.array([traj.y_at(k) for k in range(-N, N)])
        err = np.linalg.norm(yy - ys)
        worst = max(worst, err - (1e-8 + sl.window.tail_bound))
    _line(5, "simulated output equals the truncated Laurent action",
          worst <= 0.0, f"worst excess {worst:.2e}")


def test_criterion_6_contractivity_transfer(sweep):
    systems, reports, _ = sweep
    rng = np.random.default_rng(SEED + 6)
    checked = 0
    ok = True
    worst_gain = -np.inf
    worst_res = np.inf
    for sys, rep in zip(systems[:10], reports[:10]):
        if rep.certificate is None:
            continue
        dec = dichotomy_split(sys)
        H = rep.certificate.pullback()
        eps = np.sqrt(rep.certificate.strict_margin)
        for _ in range(5):
            u = rng.normal(size=(12, dec.m)) + 1j * rng.normal(size=(12, dec.m))
            traj = map_states(simulate(dec, u), dec.T)
            worst_gain = max(worst_gain, traj.l2_output() - traj.l2_input())
            worst_res = min(worst_res,
                            dissipation_residuals(H, traj, eps=eps).min())
            checked += 1
    ok = checked >= 50 and worst_gain <= 1e-8 and worst_res >= -1e-8
    _line(6, "certificates transfer to trajectory-level dissipation", ok,
          f"{checked} trajectories, worst gain excess {worst_gain:.2e}, "
          f"min residual {worst_res:.2e}")


def test_criterion_7_bicausal_congruence():
    rng = np.random.default_rng(SEED + 7)
    worst = -np.inf
    for _ in range(50):
        n = int(rng.integers(2, 6))
        nm = int(rng.integers(1, n))
        sys = scaled_to_hinf(
            random_dichotomous(rng, n=n, m=2, p=2, dim_minus=nm, margin=0.25),
            0.9)
        dec = dichotomy_split(sys)
        bi = to_bicausal(dec)
        H = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = H + H.conj().T
        Rb = bicausal_kyp_residual(bi, H)
        Rs = kyp_residual(split_state_space(dec), H)
        m = dec.m
        T = np.zeros((n + m, n + m), dtype=complex)
        T[:nm, :nm] = dec.Aminus
        T[:nm, n:] = dec.Bminus
        T[nm:n, nm:n] = np.eye(n - nm)
        T[n:, n:] = np.eye(m)
        err = np.linalg.norm(T.conj().T @ Rb @ T - Rs)
        worst = max(worst, err - 1e-9 * (1 + np.linalg.norm(Rs)))
    _line(7, "bicausal and standard residuals are congruent", worst <= 0.0,
          f"worst excess {worst:.2e}")


def test_criterion_8_truncation_self_convergence():
    rng = np.random.default_rng(SEED + 8)
    worst = -np.inf
    for _ in range(3):
        sys = scaled_to_hinf(
            random_dichotomous(rng, n=2, m=1, p=1, dim_minus=1, margin=0.3),
            0.85)
        dec = dichotomy_split(sys)
        h = hinf_norm(dec)
        da = np.linalg.norm(compute_Ha(dec, N=256, hinf=h).H
                            - compute_Ha(dec, N=512, hinf=h).H)
        dr = np.linalg.norm(compute_Hr(dec, N=256, hinf=h).H
                            - compute_Hr(dec, N=512, hinf=h).H)
        worst = max(worst, da, dr)
    _line(8, "window self-convergence of H_a and H_r at N=256",
          worst <= 1e-6, f"worst |H(N)-H(2N)| {worst:.2e}")


def test_criterion_9_nonstationary_reduction():
    rng = np.random.default_rng(SEED + 9)
    sys = scaled_to_hinf(random_dichotomous(rng, n=3, m=2, p=2, margin=0.3), 0.7)
    strict = certify_strict(sys)
    H_ref = strict.certificate.pullback()
    ok = strict.verdict == STRICTLY_CONTRACTIVE_CERTIFIED
    worst = -np.inf
    res_min = np.inf
    for p in (1, 2, 4):
        ps = PeriodicSystem([sys.A] * p, [sys.B] * p, [sys.C] * p, [sys.D] * p)
        tv = solve_tv_kyp(ps)
        for H in tv.H:
            worst = max(worst, np.linalg.norm(H - H_ref))
        res_min = min(res_min, *(np.linalg.eigvalsh(R).min()
                                 for R in tv_kyp_residuals(ps, tv.H)))
    ok = ok and worst <= 1e-8 * (1 + np.linalg.norm(H_ref)) and res_min > 0
    _line(9, "constant periodic systems reproduce the stationary certificate",
          ok, f"max |H_k - H| {worst:.2e}, min step residual {res_min:.2e}")


def test_criterion_10_negative_controls():
    rng = np.random.default_rng(SEED + 10)
    ok = True
    for _ in range(20):
        n = int(rng.integers(1, 6))
        sys = scaled_to_hinf(
            random_dichotomous(rng, n=n, m=2, p=2, margin=0.25),
            float(rng.uniform(1.1, 2.0)))
        report = certify_standard(sys)
        if report.verdict != NOT_CONTRACTIVE:
            ok = False
            break
        dec = dichotomy_split(sys)
        flipped = np.diag(np.concatenate([np.ones(dec.dim_minus),
                                          -np.ones(dec.dim_plus)]))
        Ti = np.linalg.inv(dec.T)
        H_flip = Ti.conj().T @ flipped @ Ti
        H_flip = (H_flip + H_flip.conj().T) / 2
        if np.linalg.eigvalsh(kyp_residual(sys, H_flip)).min() >= 0:
            ok = False
            break
    _line(10, "supercontractive systems rejected; flipped inertia never certifies",
          ok)
