"""Periodic time-varying systems: per-step KYP certificates via lifting.

A period-p system is certified by lifting each rotation of the per-step
epsilon-augmented system to a stationary system over one period, computing
its available-storage certificate, and pulling the certificates back to the
original coordinates.  The rotated certificates chain: each consecutive pair
satisfies the per-step KYP inequality, strictly after the augmentation rows
and columns are dropped.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import resolve_tol
from .errors import NoDichotomy, NotStrictlyContractive, RangeViolation
from .frequency import hinf_norm
from .storage import compute_Ha, compute_Hr, inertia
from .systems import StateSpaceSystem, dichotomy_split

__all__ = [
    "PeriodicSystem",
    "TvDichotomyReport",
    "LiftedSystem",
    "TvCertificate",
    "rotate_period",
    "augment_periodic",
    "monodromy",
    "tv_dichotomy",
    "lift_stationary",
    "tv_kyp_residuals",
    "solve_tv_kyp",
]


class PeriodicSystem:
    """Period-p sequences (A_k, B_k, C_k, D_k), k = 0..p-1, uniform dimensions."""

    def __init__(self, A, B, C, D):
        if not (len(A) == len(B) == len(C) == len(D)) or len(A) == 0:
            raise ValueError("A, B, C, D must be equal-length nonempty sequences")
        self.steps = [StateSpaceSystem(a, b, c, d) for a, b, c, d in zip(A, B, C, D)]
        n, m, p = self.steps[0].n, self.steps[0].m, self.steps[0].p
        for k, s in enumerate(self.steps):
            if (s.n, s.m, s.p) != (n, m, p):
                raise ValueError(f"step {k} has dimensions {(s.n, s.m, s.p)}, "
                                 f"expected {(n, m, p)}")
        self.n, self.m, self.p = n, m, p

    @property
    def period(self) -> int:
        return len(self.steps)

    def A(self, k):
        return self.steps[k % self.period].A

    def B(self, k):
        return self.steps[k % self.period].B

    def C(self, k):
        return self.steps[k % self.period].C

    def D(self, k):
        return self.steps[k % self.period].D

    def __repr__(self):
        return f"PeriodicSystem(period={self.period}, n={self.n}, m={self.m}, p={self.p})"


def rotate_period(ps: PeriodicSystem, j: int) -> PeriodicSystem:
    """The same system with the period origin moved to step j."""
    p = ps.period
    idx = [(j + k) % p for k in range(p)]
    return PeriodicSystem([ps.A(i) for i in idx], [ps.B(i) for i in idx],
                          [ps.C(i) for i in idx], [ps.D(i) for i in idx])


def augment_periodic(ps: PeriodicSystem, eps: float) -> PeriodicSystem:
    """Per-step epsilon augmentation: every M_k gets the identity paddings."""
    from .systems import augment_epsilon

    augs = [augment_epsilon(s, eps).system for s in ps.steps]
    return PeriodicSystem([a.A for a in augs], [a.B for a in augs],
                          [a.C for a in augs], [a.D for a in augs])


def monodromy(ps: PeriodicSystem):
    """Period map A_{p-1} ... A_0."""
    Phi = np.eye(ps.n, dtype=np.complex128)
    for k in range(ps.period):
        Phi = ps.A(k) @ Phi
    return Phi


@dataclass
class TvDichotomyReport:
    margin: float
    dim_minus: int
    dim_plus: int

    @property
    def has_dichotomy(self) -> bool:
        return self.margin > 0.0


def tv_dichotomy(ps: PeriodicSystem, tol=None) -> TvDichotomyReport:
    """Per-step dichotomy margin from the monodromy spectrum.

    The margin is min | |lam|^{1/p} - 1 | over eigenvalues of the period map;
    dichotomy holds iff no eigenvalue sits on the unit circle.
    """
    Phi = monodromy(ps)
    if ps.n == 0:
        return TvDichotomyReport(np.inf, 0, 0)
    lam = np.linalg.eigvals(Phi)
    mods = np.abs(lam) ** (1.0 / ps.period)
    margin = float(np.abs(mods - 1.0).min())
    return TvDichotomyReport(margin, int((mods > 1.0).sum()), int((mods < 1.0).sum()))


@dataclass
class LiftedSystem:
    """One-period stationary lifting with the step index maps.

    Input and output coordinates of step k occupy ``input_slices[k]`` and
    ``output_slices[k]`` of the stacked spaces; the lifted state is the state
    at period boundaries, so certificates for rotation j live at time step j.
    """

    system: StateSpaceSystem
    period: int
    m_step: int
    p_step: int
    input_slices: list = field(default_factory=list)
    output_slices: list = field(default_factory=list)


def lift_stationary(ps: PeriodicSystem, tol=None) -> LiftedSystem:
    """Stack one period of inputs/outputs into a stationary system.

    The lifted input-output operator is the period-blocked regrouping of the
    time-varying one, so operator norms and Laurent data are preserved.
    """
    tol = resolve_tol(tol)
    rep = tv_dichotomy(ps, tol)
    if not rep.margin > tol:
        raise NoDichotomy(f"monodromy margin {rep.margin:.3e} <= tol {tol:.3e}")
    p = ps.period
    n, m, q = ps.n, ps.m, ps.p
    A = monodromy(ps)
    B = np.zeros((n, p * m), dtype=np.complex128)
    C = np.zeros((p * q, n), dtype=np.complex128)
    D = np.zeros((p * q, p * m), dtype=np.complex128)
    # forward products P[i] = A_{i-1} ... A_0 (P[0] = I)
    P = [np.eye(n, dtype=np.complex128)]
    for k in range(p):
        P.append(ps.A(k) @ P[-1])
    for j in range(p):
        # A_{p-1} ... A_{j+1} B_j
        M = ps.B(j)
        for k in range(j + 1, p):
            M = ps.A(k) @ M
        B[:, j * m:(j + 1) * m] = M
    for i in range(p):
        C[i * q:(i + 1) * q] = ps.C(i) @ P[i]
        D[i * q:(i + 1) * q, i * m:(i + 1) * m] = ps.D(i)
        for j in range(i):
            M = ps.B(j)
            for k in range(j + 1, i):
                M = ps.A(k) @ M
            D[i * q:(i + 1) * q, j * m:(j + 1) * m] = ps.C(i) @ M
    return LiftedSystem(StateSpaceSystem(A, B, C, D), p, m, q,
                        [slice(j * m, (j + 1) * m) for j in range(p)],
                        [slice(i * q, (i + 1) * q) for i in range(p)])


def tv_kyp_residuals(ps: PeriodicSystem, Hs):
    """Per-step residuals blockdiag(H_k, I) - M_k^* blockdiag(H_{k+1}, I) M_k.

    All matrices are in the original state coordinates; the strict
    time-varying KYP inequality holds iff every residual is positive definite.
    """
    p = ps.period
    if len(Hs) != p:
        raise ValueError(f"need {p} certificates, got {len(Hs)}")
    n, m, q = ps.n, ps.m, ps.p
    out = []
    for k in range(p):
        Hk = np.asarray(Hs[k], dtype=np.complex128)
        Hk1 = np.asarray(Hs[(k + 1) % p], dtype=np.complex128)
        M = ps.steps[k].system_matrix()
        left = np.zeros((n + m, n + m), dtype=np.complex128)
        left[:n, :n] = Hk
        left[n:, n:] = np.eye(m)
        mid = np.zeros((n + q, n + q), dtype=np.complex128)
        mid[:n, :n] = Hk1
        mid[n:, n:] = np.eye(q)
        R = left - M.conj().T @ mid @ M
        out.append((R + R.conj().T) / 2.0)
    return out


@dataclass
class TvCertificate:
    """Periodic family of invertible selfadjoint certificates, original coordinates."""

    H: list
    residual_spectra: list
    inertia: tuple
    epsilon: float
    max_norm: float
    max_inv_norm: float

    @property
    def residual_min(self) -> float:
        return min(float(s.min()) for s in self.residual_spectra)


def solve_tv_kyp(ps: PeriodicSystem, tol=None, epsilon=None) -> TvCertificate:
    """Strict per-step KYP certificates for a periodic dichotomous system.

    Chooses eps by the downward search on the lifted norm, augments every
    step, computes the available-storage certificate of each rotation's
    lifting, pulls them back to original coordinates, and verifies the
    per-step residuals and constant inertia.
    """
    tol = resolve_tol(tol)
    rep = tv_dichotomy(ps, tol)
    if not rep.margin > tol:
        raise NoDichotomy(f"monodromy margin {rep.margin:.3e} <= tol {tol:.3e}")
    lift0 = lift_stationary(ps, tol)
    dec0 = dichotomy_split(lift0.system, tol)
    hinf = hinf_norm(dec0, tol)
    if not hinf < 1.0 - tol:
        raise NotStrictlyContractive(f"lifted norm {hinf:.6g} >= 1 - tol")

    target = (1.0 + hinf) / 2.0
    eps = None
    hinf_eps = None
    if epsilon is not None:
        eps = float(epsilon)
        aug = augment_periodic(ps, eps)
        hinf_eps = hinf_norm(dichotomy_split(lift_stationary(aug, tol).system, tol), tol)
    else:
        for k in range(61):
            cand = 2.0 ** (-k)
            aug = augment_periodic(ps, cand)
            lift_aug = lift_stationary(aug, tol)
            h = hinf_norm(dichotomy_split(lift_aug.system, tol), tol)
            if h <= target:
                eps, hinf_eps = cand, h
                break
    if eps is None:
        raise NotStrictlyContractive("no eps met the augmented norm target")

    aug = augment_periodic(ps, eps)
    Hs = []
    sigs = []
    for j in range(ps.period):
        lif = lift_stationary(rotate_period(aug, j), tol)
        dec = dichotomy_split(lif.system, tol)
        try:
            cert = compute_Ha(dec, tol=tol, hinf=hinf_eps)
        except RangeViolation:
            cert = compute_Hr(dec, tol=tol, hinf=hinf_eps)
        Hs.append(cert.pullback())
        sigs.append(inertia(Hs[-1], tol))
    if len(set(sigs)) != 1:
        raise NotStrictlyContractive(f"certificate inertia varies across steps: {sigs}")
    spectra = [np.linalg.eigvalsh(R) for R in tv_kyp_residuals(ps, Hs)]
    if min(float(s.min()) for s in spectra) <= 0.0:
        raise NotStrictlyContractive(
            "per-step residuals are not positive definite at this window")
    norms = [float(np.linalg.norm(H, 2)) for H in Hs]
    inv_norms = [1.0 / float(np.linalg.svd(H, compute_uv=False)[-1]) for H in Hs]
    return TvCertificate(Hs, spectra, sigs[0], eps, max(norms), max(inv_norms))
