import json

import numpy as np
import pytest

from kypcert import (
    StateSpaceSystem,
    bicausal_kyp_residual,
    build_gramians,
    build_quadruple,
    check_exact_minimality,
    compute_Ha,
    compute_Hr,
    defect,
    dichotomy_split,
    douglas_factor,
    hinf_norm,
    inertia,
    kyp_residual,
    read_certificate,
    split_state_space,
    to_bicausal,
    augment_epsilon,
    write_certificate,
)
from kypcert.errors import (
    NotContractive,
    NotExactlyMinimal,
    NotSelfadjoint,
    RangeViolation,
)

from conftest import random_bicausal, random_contractive


class TestGramians:
    def test_scalar_controllability_row(self):
        dec = dichotomy_split(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.0]]))
        g = build_gramians(dec, 3)
        assert np.allclose(g.WcPlus, [[0.25, 0.5, 1.0]])

    def test_zero_input_operator(self):
        dec = dichotomy_split(StateSpaceSystem(np.diag([0.5, 2.0]),
                                               np.zeros((2, 1)),
                                               np.ones((1, 2)), [[0.0]]))
        g = build_gramians(dec, 8)
        assert np.linalg.norm(g.WcPlus) == 0.0
        assert g.sigma_c_plus == 0.0

    def test_hankel_factorization(self, rng):
        for k in range(3):
            dec = dichotomy_split(random_contractive(rng, n=4, m=2, p=2))
            N = 24
            q = build_quadruple(dec, N)
            g = build_gramians(dec, N)
            tail = q.window.tail_bound
            assert np.linalg.norm(q.H - g.WoPlus @ g.WcPlus) <= tail + 1e-12
            assert np.linalg.norm(q.Htilde - g.WoMinus @ g.WcMinus) <= tail + 1e-12

    def test_bicausal_hankel_factorization(self, rng):
        bi = random_bicausal(rng, n=4, dim_minus=2, hinf_target=0.9)
        N = 24
        q = build_quadruple(bi, N)
        g = build_gramians(bi, N)
        assert np.linalg.norm(q.H - g.WoPlus @ g.WcPlus) <= q.window.tail_bound + 1e-12
        assert np.linalg.norm(q.Htilde - g.WoMinus @ g.WcMinus) <= q.window.tail_bound + 1e-12


class TestMinimality:
    def test_identity_input_is_controllable(self):
        dec = dichotomy_split(StateSpaceSystem(np.diag([0.5, 0.25]), np.eye(2),
                                               np.eye(2), np.zeros((2, 2))))
        g = build_gramians(dec, 16)
        rep = check_exact_minimality(g, 1e-8)
        assert rep.controllable_plus and rep.margin_c_plus >= 1.0

    def test_zero_output_not_observable(self):
        dec = dichotomy_split(StateSpaceSystem(np.diag([0.5, 2.0]),
                                               np.ones((2, 1)),
                                               np.zeros((1, 2)), [[0.0]]))
        rep = check_exact_minimality(build_gramians(dec, 16), 1e-8)
        assert not rep.observable_plus and not rep.observable_minus
        assert not rep.is_minimal

    def test_augmented_minimal_with_eps_margin(self, rng):
        eps = 0.125
        sys = random_contractive(rng, n=3, hinf_target=0.5)
        aug = augment_epsilon(sys, eps)
        rep = check_exact_minimality(
            build_gramians(dichotomy_split(aug.system), 32), 1e-8)
        assert rep.is_minimal
        # the one-step identity block alone already gives an eps margin in
        # split coordinates up to the similarity conditioning
        T = dichotomy_split(aug.system).T
        floor = eps / np.linalg.cond(T) * 0.99
        assert min(rep.margin_c_plus, rep.margin_c_minus) >= floor


class TestDefect:
    def test_zero(self):
        assert np.allclose(defect(np.zeros((3, 3))), np.eye(3))

    def test_scalar_scaling(self):
        assert np.allclose(defect(0.6 * np.eye(4)), 0.8 * np.eye(4))

    def test_square_identity(self, rng):
        T = rng.normal(size=(6, 4)) + 1j * rng.normal(size=(6, 4))
        T = 0.9 * T / np.linalg.norm(T, 2)
        D = defect(T)
        assert np.linalg.norm(D @ D - (np.eye(4) - T.conj().T @ T)) <= 1e-12

    def test_not_contractive(self):
        with pytest.raises(NotContractive):
            defect(2.0 * np.eye(2))


class TestDouglas:
    def test_identity(self, rng):
        W = rng.normal(size=(4, 3)) + 0j
        fac = douglas_factor(np.eye(4), W)
        assert np.allclose(fac.X, W)
        assert fac.residual <= 1e-14

    def test_zero_operator_violation(self):
        with pytest.raises(RangeViolation):
            douglas_factor(np.zeros((3, 3)), np.ones((3, 1)))

    def test_observability_factorization(self, rng):
        # W_o^+ factors exactly through the defect of the future Toeplitz block
        sys = random_contractive(rng, n=2, m=1, p=1, hinf_target=0.9)
        dec = dichotomy_split(sys)
        N = 256
        q = build_quadruple(dec, N)
        g = build_gramians(dec, N)
        Dst = defect(q.T.conj().T)          # (I - T T^*)^{1/2}
        fac = douglas_factor(Dst, g.WoPlus)
        assert fac.residual <= 1e-8 * max(np.linalg.norm(g.WoPlus), 1.0)
        assert np.linalg.norm(Dst @ fac.X - g.WoPlus) <= 1e-8


class TestCertificates:
    def test_zero_output_controllable_only(self, rng):
        # F == 0: H_a exists under exact controllability alone and its
        # residual stays PSD
        sys = random_contractive(rng, n=3, dim_minus=1, hinf_target=0.5)
        sys0 = StateSpaceSystem(sys.A, sys.B, np.zeros((sys.p, sys.n)),
                                np.zeros((sys.p, sys.m)))
        dec = dichotomy_split(sys0)
        with pytest.raises(NotExactlyMinimal):
            compute_Ha(dec, N=32, hinf=0.0)
        cert = compute_Ha(dec, N=32, hinf=0.0, require_minimal=False)
        assert cert.residual_spectrum.min() >= -1e-8

    def test_stable_scalar_positive(self):
        # hinf = 0.4 * 2 = 0.8 at z = 1
        sys = StateSpaceSystem([[0.5]], [[1.0]], [[0.4]], [[0.0]])
        dec = dichotomy_split(sys)
        cert = compute_Ha(dec)
        assert cert.H[0, 0].real > 0
        assert cert.residual_spectrum.min() >= -1e-8
        assert cert.inertia == (1, 0, 0)

    def test_self_convergence(self, rng):
        sys = random_contractive(rng, n=3, m=1, p=1, margin=0.3, hinf_target=0.8)
        dec = dichotomy_split(sys)
        h = hinf_norm(dec)
        Ha1 = compute_Ha(dec, N=64, hinf=h).H
        Ha2 = compute_Ha(dec, N=128, hinf=h).H
        assert np.linalg.norm(Ha1 - Ha2) <= 1e-6

    def test_extremal_pair(self, rng):
        for k in range(4):
            sys = random_contractive(rng, n=4, m=2, p=2, hinf_target=0.85)
            dec = dichotomy_split(sys)
            h = hinf_norm(dec)
            ca = compute_Ha(dec, hinf=h)
            cr = compute_Hr(dec, hinf=h)
            assert ca.residual_spectrum.min() >= -1e-8
            assert cr.residual_spectrum.min() >= -1e-8
            gap = np.linalg.eigvalsh(cr.H - ca.H)
            assert gap.min() >= -1e-8
            assert ca.inertia == (dec.dim_plus, dec.dim_minus, 0)
            assert cr.inertia == (dec.dim_plus, dec.dim_minus, 0)
            ss = split_state_space(dec)
            for lam in (0.25, 0.5, 0.75):
                R = kyp_residual(ss, lam * ca.H + (1 - lam) * cr.H)
                assert np.linalg.eigvalsh(R).min() >= -1e-8

    def test_identity_scaled_io(self, rng):
        # B = eps I, C = eps I keeps both certificates invertible with margin
        eps = 0.05
        n = 3
        A = np.diag([0.4, 0.3, 1.8])
        sys = StateSpaceSystem(A, eps * np.eye(n), eps * np.eye(n),
                               np.zeros((n, n)))
        dec = dichotomy_split(sys)
        h = hinf_norm(dec)
        assert h < 1
        for cert in (compute_Ha(dec, hinf=h), compute_Hr(dec, hinf=h)):
            assert cert.residual_spectrum.min() >= -1e-9
            assert cert.inertia == (2, 1, 0)
            assert np.abs(np.linalg.eigvalsh(cert.H)).min() > 1e-8

    def test_bicausal_certificates_match_dichotomous(self, rng):
        sys = random_contractive(rng, n=4, dim_minus=2, hinf_target=0.8)
        dec = dichotomy_split(sys)
        bi = to_bicausal(dec)
        h = hinf_norm(dec)
        Ha_d = compute_Ha(dec, N=48, hinf=h).H
        Ha_b = compute_Ha(bi, N=48, hinf=h).H
        assert np.linalg.norm(Ha_d - Ha_b) <= 1e-9 * (1 + np.linalg.norm(Ha_d))
        cb = compute_Ha(bi, N=48, hinf=h)
        assert cb.residual_spectrum.min() >= -1e-8

    def test_defect_dominance(self, rng):
        sys = random_contractive(rng, n=4, m=2, p=2, hinf_target=0.95)
        dec = dichotomy_split(sys)
        q = build_quadruple(dec, 48)
        Dst2 = np.eye(q.T.shape[0]) - q.T @ q.T.conj().T
        gap = np.linalg.eigvalsh(Dst2 - q.H @ q.H.conj().T)
        assert gap.min() >= -1e-8


class TestKypResidual:
    def test_zero_system(self):
        sys = StateSpaceSystem(np.zeros((2, 2)), np.zeros((2, 1)),
                               np.zeros((1, 2)), np.zeros((1, 1)))
        R = kyp_residual(sys, np.eye(2))
        assert np.allclose(R, np.eye(3))

    def test_spatial_identity(self, rng):
        sys = random_contractive(rng, n=3, m=2, p=2)
        H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        H = H + H.conj().T
        R = kyp_residual(sys, H)
        for _ in range(100):
            x = rng.normal(size=3) + 1j * rng.normal(size=3)
            u = rng.normal(size=2) + 1j * rng.normal(size=2)
            v = np.concatenate([x, u])
            xn = sys.A @ x + sys.B @ u
            y = sys.C @ x + sys.D @ u
            lhs = np.real(v.conj() @ R @ v)
            rhs = (np.real(x.conj() @ H @ x) + np.linalg.norm(u) ** 2
                   - np.real(xn.conj() @ H @ xn) - np.linalg.norm(y) ** 2)
            assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))

    def test_not_selfadjoint(self, rng):
        sys = random_contractive(rng, n=2)
        with pytest.raises(NotSelfadjoint):
            kyp_residual(sys, np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestBicausalResidual:
    def test_zero_system(self):
        from kypcert import BicausalRealization

        bi = BicausalRealization(np.zeros((1, 1)), np.zeros((1, 1)),
                                 np.zeros((1, 1)), np.zeros((1, 1)),
                                 np.zeros((1, 1)), np.zeros((1, 1)),
                                 np.zeros((1, 1)))
        R = bicausal_kyp_residual(bi, np.eye(2))
        # hand substitution: residual = diag(-H_minus, H_plus, I_m)
        assert np.allclose(R, np.diag([-1.0, 1.0, 1.0]))

    def test_congruent_to_standard(self, rng):
        for k in range(3):
            sys = random_contractive(rng, n=4, dim_minus=2, hinf_target=0.9)
            dec = dichotomy_split(sys)
            bi = to_bicausal(dec)
            H = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            H = H + H.conj().T
            Rb = bicausal_kyp_residual(bi, H)
            Rs = kyp_residual(split_state_space(dec), H)
            nm, m = 2, dec.m
            T = np.zeros((4 + m, 4 + m), dtype=complex)
            T[:nm, :nm] = dec.Aminus
            T[:nm, 4:] = dec.Bminus
            T[nm:4, nm:4] = np.eye(2)
            T[4:, 4:] = np.eye(m)
            err = np.linalg.norm(T.conj().T @ Rb @ T - Rs)
            assert err <= 1e-10 * (1 + np.linalg.norm(Rs))

    def test_eps_zero_matches_standard_assembly(self, rng):
        bi = random_bicausal(rng, n=3, dim_minus=1)
        H = rng.normal(size=(3, 3))
        H = H + H.T
        assert np.allclose(bicausal_kyp_residual(bi, H, eps=0.0),
                           bicausal_kyp_residual(bi, H))


class TestInertia:
    def test_hand_values(self):
        assert inertia(np.diag([-1.0, 3.0])) == (1, 1, 0)
        assert inertia(np.zeros((3, 3))) == (0, 0, 3)

    def test_certificate_signature(self, rng):
        sys = random_contractive(rng, n=5, dim_minus=3, hinf_target=0.8)
        dec = dichotomy_split(sys)
        cert = compute_Ha(dec)
        assert cert.inertia == (dec.dim_plus, dec.dim_minus, 0)


def test_certificate_json_round_trip(tmp_path, rng):
    sys = random_contractive(rng, n=3, hinf_target=0.7)
    cert = compute_Ha(dichotomy_split(sys))
    path = tmp_path / "cert.json"
    write_certificate(cert, path)
    back = read_certificate(path)
    assert np.allclose(back.H, cert.H, atol=1e-13)
    assert back.inertia == cert.inertia
    assert back.window_N == cert.window_N
    # bit-identical numeric payload on re-export
    path2 = tmp_path / "cert2.json"
    write_certificate(back, path2)
    assert path.read_bytes() == path2.read_bytes()
    doc = json.loads(path.read_text())
    for key in ("H", "residual_spectrum", "inertia", "epsilon", "window_N",
                "tail_bound", "coordinates_T"):
        assert key in doc
