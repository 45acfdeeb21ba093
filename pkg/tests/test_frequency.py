import numpy as np
import pytest

from kypcert import (
    StateSpaceSystem,
    build_laurent,
    build_quadruple,
    dichotomy_split,
    eval_transfer,
    gain_profile,
    hinf_norm,
    laurent_coeff,
    laurent_slice,
    to_bicausal,
    write_gain_csv,
)
from kypcert.errors import PoleProximity

from conftest import random_contractive


def diag_example():
    sys = StateSpaceSystem(np.diag([0.5, 2.0]), [[1], [1]], [[1, 1]], [[0]])
    return dichotomy_split(sys)


class TestEvalTransfer:
    def test_at_zero_stable(self):
        dec = dichotomy_split(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.7]]))
        assert eval_transfer(dec, 0.0)[0, 0] == pytest.approx(0.7)

    def test_hand_value_at_one(self):
        # F(1) = 1/(1-0.5) - 1/(2-1) = 2 - 1 = 1
        assert eval_transfer(diag_example(), 1.0)[0, 0] == pytest.approx(1.0)

    def test_split_matches_direct_solve(self, rng):
        sys = random_contractive(rng, n=5, m=2, p=3)
        dec = dichotomy_split(sys)
        for z in np.exp(1j * np.linspace(0.0, 6.2, 9)):
            direct = sys.D + z * sys.C @ np.linalg.solve(np.eye(5) - z * sys.A, sys.B)
            assert np.allclose(eval_transfer(dec, z), direct, atol=1e-10)

    def test_bicausal_empty_anticausal_matches_causal(self):
        sys = StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.3]])
        dec = dichotomy_split(sys)
        bi = to_bicausal(dec)
        for z in np.exp(1j * np.linspace(0, 6, 5)):
            assert np.allclose(eval_transfer(bi, z), eval_transfer(dec, z))

    def test_pole_proximity(self):
        sys = StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.0]])
        with pytest.raises(PoleProximity):
            eval_transfer(sys, 2.0)


class TestLaurentCoeff:
    def test_hand_values(self):
        dec = diag_example()
        assert laurent_coeff(dec, 1)[0, 0] == pytest.approx(1.0)
        assert laurent_coeff(dec, 0)[0, 0] == pytest.approx(-0.5)
        assert laurent_coeff(dec, -1)[0, 0] == pytest.approx(-0.25)

    def test_feedthrough_only(self):
        sys = StateSpaceSystem(np.diag([0.5, 2.0]), np.zeros((2, 1)),
                               np.zeros((1, 2)), [[0.9]])
        dec = dichotomy_split(sys)
        assert laurent_coeff(dec, 0)[0, 0] == pytest.approx(0.9)
        for k in (-3, -1, 1, 4):
            assert np.linalg.norm(laurent_coeff(dec, k)) == 0.0

    def test_fft_oracle(self, rng):
        dec = dichotomy_split(random_contractive(rng, n=4, m=2, p=2))
        ngrid = 4096
        zs = np.exp(2j * np.pi * np.arange(ngrid) / ngrid)
        vals = np.array([eval_transfer(dec, z) for z in zs])
        # F_k = (1/N) sum_j F(z_j) z_j^{-k}
        for k in range(-5, 6):
            est = (vals * zs[:, None, None] ** (-k)).mean(axis=0)
            assert np.allclose(est, laurent_coeff(dec, k), atol=1e-10)

    def test_bicausal_matches_dichotomous(self, rng):
        dec = dichotomy_split(random_contractive(rng, n=4, dim_minus=2))
        bi = to_bicausal(dec)
        for k in range(-20, 21):
            assert np.allclose(laurent_coeff(dec, k), laurent_coeff(bi, k),
                               atol=1e-11)

    def test_geometric_envelope(self, rng):
        sl = laurent_slice(dichotomy_split(random_contractive(rng, n=4)), 24)
        c, rho = sl.window.c, sl.window.rho
        for k in range(-sl.K, sl.K + 1):
            assert np.linalg.norm(sl.coeff(k), 2) <= c * rho ** abs(k) + 1e-14


class TestHinfNorm:
    def test_constant(self):
        sys = StateSpaceSystem(np.zeros((1, 1)), [[0.0]], [[0.0]], [[0.3]])
        assert hinf_norm(dichotomy_split(sys)) == pytest.approx(0.3)

    def test_scalar_peak_at_one(self):
        # sup |z/(1-0.5 z)| over the circle is 2, attained at z = 1
        dec = dichotomy_split(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.0]]))
        got = hinf_norm(dec, tol=1e-10)
        assert got == pytest.approx(2.0, rel=1e-9)
        thetas = np.linspace(0, 2 * np.pi, 100000, endpoint=False)
        brute = max(abs(np.exp(1j * t) / (1 - 0.5 * np.exp(1j * t))) for t in thetas)
        assert got >= brute - 1e-9

    def test_output_scaling(self, rng):
        sys = random_contractive(rng, n=3)
        dec = dichotomy_split(sys)
        scaled = dichotomy_split(StateSpaceSystem(sys.A, sys.B, 3.0 * sys.C, 3.0 * sys.D))
        assert hinf_norm(scaled) == pytest.approx(3.0 * hinf_norm(dec), rel=1e-9)


class TestLaurentMatrix:
    def test_feedthrough_only_block_diagonal(self):
        sys = StateSpaceSystem(np.zeros((1, 1)), [[0.0]], [[0.0]], [[0.9]])
        dec = dichotomy_split(sys)
        L = build_laurent(dec, 4)
        assert np.allclose(L, 0.9 * np.eye(8))

    def test_entries_are_coefficients(self, rng):
        dec = dichotomy_split(random_contractive(rng, n=3, m=2, p=2))
        N = 6
        L = build_laurent(dec, N)
        p, m = dec.p, dec.m
        for i in range(-N, N):
            for j in range(-N, N):
                blk = L[(i + N) * p:(i + N + 1) * p, (j + N) * m:(j + N + 1) * m]
                assert np.allclose(blk, laurent_coeff(dec, i - j), atol=1e-12)

    def test_compression_norms_monotone(self, rng):
        dec = dichotomy_split(random_contractive(rng, n=4, hinf_target=0.9))
        h = hinf_norm(dec)
        s1 = np.linalg.norm(build_laurent(dec, 16), 2)
        s2 = np.linalg.norm(build_laurent(dec, 32), 2)
        assert s1 <= s2 + 1e-12
        assert s2 <= h + 1e-8


class TestQuadruple:
    def test_reassembly(self, rng):
        dec = dichotomy_split(random_contractive(rng, n=3, m=2, p=2))
        N = 5
        q = build_quadruple(dec, N)
        L = build_laurent(dec, N)
        assert np.allclose(np.block([[q.Ttilde, q.Htilde], [q.H, q.T]]), L)

    def test_stable_system_structure(self):
        dec = dichotomy_split(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]], [[0.2]]))
        q = build_quadruple(dec, 6)
        assert np.linalg.norm(q.Htilde) == 0.0
        assert np.allclose(q.T, np.tril(q.T))


def test_gain_csv_round_trip(tmp_path, rng):
    dec = dichotomy_split(random_contractive(rng, n=3))
    path = tmp_path / "gain.csv"
    write_gain_csv(dec, path, npoints=64)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "theta,sigma_max"
    thetas, sig = gain_profile(dec, 64)
    got = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert np.allclose(got[:, 0], thetas, atol=1e-14)
    assert np.allclose(got[:, 1], sig, rtol=1e-14)
