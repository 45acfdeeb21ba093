"""Shared generators for random dichotomous test systems."""

import numpy as np
import pytest

from kypcert import (
    StateSpaceSystem,
    dichotomy_split,
    hinf_norm,
    to_bicausal,
)


def random_unitary(rng, n):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_dichotomous(rng, n=4, m=2, p=2, dim_minus=None, margin=0.25,
                       mod_low=0.15, mod_high=2.5):
    """Random dichotomous system with spectral margin at least `margin`.

    B and C* are full rank almost surely; the similarity is kept moderately
    conditioned so split coordinates stay well scaled.
    """
    nm = int(rng.integers(0, n + 1)) if dim_minus is None else dim_minus
    mods = np.concatenate([
        rng.uniform(1.0 + margin + 0.05, mod_high, nm),
        rng.uniform(mod_low, 1.0 - margin - 0.05, n - nm),
    ])
    lam = mods * np.exp(2j * np.pi * rng.uniform(size=n))
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 2.0 * np.eye(n)
    A = S @ np.diag(lam) @ np.linalg.inv(S)
    B = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    C = rng.normal(size=(p, n)) + 1j * rng.normal(size=(p, n))
    D = rng.normal(size=(p, m)) + 1j * rng.normal(size=(p, m))
    return StateSpaceSystem(A, B, C, D)


def scaled_to_hinf(sys, target, tol=1e-9):
    """Rescale (C, D) so the transfer function has the requested sup norm."""
    dec = dichotomy_split(sys)
    h = hinf_norm(dec, tol)
    a = target / h
    return StateSpaceSystem(sys.A, sys.B, a * sys.C, a * sys.D)


def random_contractive(rng, n=4, m=2, p=2, dim_minus=None, margin=0.25,
                       hinf_target=0.8):
    return scaled_to_hinf(
        random_dichotomous(rng, n, m, p, dim_minus, margin), hinf_target)


def random_bicausal(rng, n=4, m=2, p=2, dim_minus=None, margin=0.25,
                    hinf_target=None):
    sys = random_dichotomous(rng, n, m, p, dim_minus, margin)
    if hinf_target is not None:
        sys = scaled_to_hinf(sys, hinf_target)
    return to_bicausal(dichotomy_split(sys))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
