"""System representations, the dichotomy split, and epsilon augmentations.

State operators are split along the unit circle: eigenvalues inside the open
disk go to the exponentially stable block ``A_plus``, eigenvalues outside the
closed disk to the antistable block ``A_minus``.  The split state ordering is
always ``[x_minus; x_plus]``.
"""

import numpy as np
from scipy.linalg import schur, solve_sylvester

from .config import resolve_tol
from .errors import (
    NoDichotomy,
    NonPositiveEpsilon,
    NonSquare,
    SingularAminus,
    SylvesterFailure,
)

__all__ = [
    "StateSpaceSystem",
    "DichotomousDecomposition",
    "BicausalRealization",
    "AugmentedSystem",
    "spectral_margin",
    "spectral_radius",
    "dichotomy_split",
    "split_state_space",
    "to_bicausal",
    "from_bicausal",
    "augment_epsilon",
    "augment_epsilon_bicausal",
]


def _cmat(x, rows, cols, name):
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got ndim={a.ndim}")
    if rows is not None and a.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {a.shape[0]}")
    if cols is not None and a.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} columns, got {a.shape[1]}")
    if a.size and not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name} contains non-finite entries")
    return a


class StateSpaceSystem:
    """Discrete-time system x(n+1) = A x(n) + B u(n), y(n) = C x(n) + D u(n)."""

    def __init__(self, A, B, C, D):
        self.A = _cmat(A, None, None, "A")
        if self.A.shape[0] != self.A.shape[1]:
            raise NonSquare(f"A must be square, got {self.A.shape}")
        n = self.A.shape[0]
        self.B = _cmat(B, n, None, "B")
        m = self.B.shape[1]
        self.C = _cmat(C, None, n, "C")
        p = self.C.shape[0]
        self.D = _cmat(D, p, m, "D")
        self.n, self.m, self.p = n, m, p

    def system_matrix(self):
        """The (n+p) x (n+m) block matrix [[A, B], [C, D]]."""
        return np.block([[self.A, self.B], [self.C, self.D]])

    def __repr__(self):
        return f"StateSpaceSystem(n={self.n}, m={self.m}, p={self.p})"


def spectral_radius(A) -> float:
    A = np.asarray(A, dtype=np.complex128)
    if A.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(A)).max())


def spectral_margin(A) -> float:
    """Distance of the spectrum of A from the unit circle, min | |lam| - 1 |.

    Zero (within eigensolver accuracy) means the dichotomy fails.  An empty
    matrix has no spectrum and returns infinity.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return np.inf
    return float(np.abs(np.abs(np.linalg.eigvals(A)) - 1.0).min())


class DichotomousDecomposition:
    """Spectral split of a dichotomous system, expressed in split coordinates.

    ``T`` is the similarity to the split coordinates: T^{-1} A T is block
    diagonal with the antistable block first, and B, C are transformed
    accordingly (``Bminus = (T^{-1} B)[:dim_minus]`` etc.).  The feedthrough
    D is carried along unchanged.
    """

    def __init__(self, Aminus, Aplus, Bminus, Bplus, Cminus, Cplus, D, T, margin):
        self.Aminus = np.asarray(Aminus, dtype=np.complex128)
        self.Aplus = np.asarray(Aplus, dtype=np.complex128)
        self.dim_minus = self.Aminus.shape[0]
        self.dim_plus = self.Aplus.shape[0]
        self.Bminus = np.asarray(Bminus, dtype=np.complex128)
        self.Bplus = np.asarray(Bplus, dtype=np.complex128)
        self.Cminus = np.asarray(Cminus, dtype=np.complex128)
        self.Cplus = np.asarray(Cplus, dtype=np.complex128)
        self.D = np.asarray(D, dtype=np.complex128)
        self.T = np.asarray(T, dtype=np.complex128)
        self.margin = float(margin)

    @property
    def n(self):
        return self.dim_minus + self.dim_plus

    @property
    def m(self):
        return self.D.shape[1]

    @property
    def p(self):
        return self.D.shape[0]

    def rho(self):
        """Decay rates (rho_minus, rho_plus) of the two half-line propagators."""
        rm = spectral_radius(np.linalg.inv(self.Aminus)) if self.dim_minus else 0.0
        return rm, spectral_radius(self.Aplus)

    def _prop(self):
        """Unified propagator data (F0, CP, AP, BP, CM0, AM0, BM0).

        Laurent coefficients are F_k = CP AP^{k-1} BP for k >= 1 and
        F_{-k} = CM0 AM0^{k-1} BM0 for k >= 1, with F_0 as given.
        """
        if self.dim_minus:
            Ami = np.linalg.inv(self.Aminus)
            CM0 = self.Cminus @ Ami
            BM0 = -Ami @ self.Bminus
            F0 = self.D - CM0 @ self.Bminus
        else:
            Ami = self.Aminus
            CM0 = self.Cminus
            BM0 = self.Bminus
            F0 = self.D.copy()
        return F0, self.Cplus, self.Aplus, self.Bplus, CM0, Ami, BM0

    def __repr__(self):
        return (f"DichotomousDecomposition(dim_minus={self.dim_minus}, "
                f"dim_plus={self.dim_plus}, margin={self.margin:.3g})")


class BicausalRealization:
    """A causal/anticausal pair of exponentially stable subsystems."""

    def __init__(self, Aplus, Bplus, Cplus, D, Aminus, Bminus, Cminus):
        self.Aplus = _cmat(Aplus, None, None, "Aplus")
        if self.Aplus.shape[0] != self.Aplus.shape[1]:
            raise NonSquare("Aplus must be square")
        self.Aminus = _cmat(Aminus, None, None, "Aminus")
        if self.Aminus.shape[0] != self.Aminus.shape[1]:
            raise NonSquare("Aminus must be square")
        npl, nm = self.Aplus.shape[0], self.Aminus.shape[0]
        self.Bplus = _cmat(Bplus, npl, None, "Bplus")
        m = self.Bplus.shape[1]
        self.Bminus = _cmat(Bminus, nm, m, "Bminus")
        self.Cplus = _cmat(Cplus, None, npl, "Cplus")
        p = self.Cplus.shape[0]
        self.Cminus = _cmat(Cminus, p, nm, "Cminus")
        self.D = _cmat(D, p, m, "D")
        self.dim_minus, self.dim_plus = nm, npl
        self.m, self.p = m, p
        # derived feedthrough of the combined input-output map
        self.Dhat = self.Cminus @ self.Bminus + self.D

    @property
    def n(self):
        return self.dim_minus + self.dim_plus

    def rho(self):
        return spectral_radius(self.Aminus), spectral_radius(self.Aplus)

    def _prop(self):
        CM0 = self.Cminus @ self.Aminus
        return self.Dhat, self.Cplus, self.Aplus, self.Bplus, CM0, self.Aminus, self.Bminus

    def __repr__(self):
        return (f"BicausalRealization(dim_minus={self.dim_minus}, "
                f"dim_plus={self.dim_plus}, m={self.m}, p={self.p})")


def dichotomy_split(sys: StateSpaceSystem, tol=None) -> DichotomousDecomposition:
    """Split a dichotomous system along the unit circle.

    Ordered complex Schur form (antistable eigenvalues first), a Sylvester
    solve to decouple the off-diagonal block, then per-block
    orthonormalization of the invariant-subspace bases.

    Raises
    ------
    NoDichotomy
        If the spectral margin of A does not exceed `tol`.
    SylvesterFailure
        If the decoupled form fails its residual check.
    """
    tol = resolve_tol(tol)
    A = sys.A
    n = sys.n
    margin = spectral_margin(A)
    if not margin > tol:
        raise NoDichotomy(f"spectral margin {margin:.3e} <= tol {tol:.3e}")
    if n == 0:
        T = np.zeros((0, 0), dtype=np.complex128)
        e = np.zeros((0, 0), dtype=np.complex128)
        return DichotomousDecomposition(e, e, sys.B[:0], sys.B, sys.C[:, :0],
                                        sys.C, sys.D, T, margin)

    Ts, Z, k = schur(A, output="complex", sort=lambda lam: abs(lam) > 1.0)
    if 0 < k < n:
        try:
            X = solve_sylvester(Ts[:k, :k], -Ts[k:, k:], -Ts[:k, k:])
        except Exception as exc:  # scipy raises ValueError on failure
            raise SylvesterFailure(str(exc)) from exc
        S = np.eye(n, dtype=np.complex128)
        S[:k, k:] = X
        T = Z @ S
        Qm, _ = np.linalg.qr(T[:, :k])
        Qp, _ = np.linalg.qr(T[:, k:])
        T = np.hstack([Qm, Qp])
    else:
        T = Z

    Ab = np.linalg.solve(T, A @ T)
    off = 0.0
    if 0 < k < n:
        off = np.linalg.norm(Ab[:k, k:]) + np.linalg.norm(Ab[k:, :k])
    scale = max(np.linalg.norm(A), 1.0)
    if off > 10.0 * max(tol, 1e-13) * scale:
        raise SylvesterFailure(
            f"off-diagonal residual {off:.3e} exceeds 10*tol*||A|| = {10*tol*scale:.3e}")

    Bs = np.linalg.solve(T, sys.B)
    Cs = sys.C @ T
    return DichotomousDecomposition(
        Ab[:k, :k], Ab[k:, k:], Bs[:k], Bs[k:], Cs[:, :k], Cs[:, k:],
        sys.D, T, margin)


def split_state_space(dec: DichotomousDecomposition) -> StateSpaceSystem:
    """The system in split coordinates, with A exactly block diagonal."""
    nm, npl = dec.dim_minus, dec.dim_plus
    A = np.zeros((nm + npl, nm + npl), dtype=np.complex128)
    A[:nm, :nm] = dec.Aminus
    A[nm:, nm:] = dec.Aplus
    B = np.vstack([dec.Bminus, dec.Bplus])
    C = np.hstack([dec.Cminus, dec.Cplus])
    return StateSpaceSystem(A, B, C, dec.D)


def to_bicausal(dec: DichotomousDecomposition, D=None) -> BicausalRealization:
    """Represent a dichotomous system as a bicausal pair.

    The causal subsystem is kept; the antistable block is turned around:
    (C-, A-^{-1}, -A-^{-1} B-) runs backward in time.
    """
    D = dec.D if D is None else np.asarray(D, dtype=np.complex128)
    if dec.dim_minus:
        Ami = np.linalg.inv(dec.Aminus)
        Am_t = Ami
        Bm_t = -Ami @ dec.Bminus
    else:
        Am_t = dec.Aminus
        Bm_t = dec.Bminus
    return BicausalRealization(dec.Aplus, dec.Bplus, dec.Cplus, D,
                               Am_t, Bm_t, dec.Cminus)


def from_bicausal(bi: BicausalRealization, tol=None) -> StateSpaceSystem:
    """Invert `to_bicausal`: recover a dichotomous state-space system.

    Requires the anticausal state operator to be invertible; otherwise the
    realization is genuinely bicausal-only and SingularAminus is raised.
    Block order is [x_plus; x_minus] as the direct construction gives it.
    """
    tol = resolve_tol(tol)
    nm, npl = bi.dim_minus, bi.dim_plus
    if nm:
        sv = np.linalg.svd(bi.Aminus, compute_uv=False)
        if sv[-1] <= tol * max(sv[0], 1.0):
            raise SingularAminus(
                f"cond(Aminus) above 1/tol (sigma_min={sv[-1]:.3e})")
        Ainv = np.linalg.inv(bi.Aminus)
        Bm = -Ainv @ bi.Bminus
    else:
        Ainv = bi.Aminus
        Bm = bi.Bminus
    A = np.zeros((npl + nm, npl + nm), dtype=np.complex128)
    A[:npl, :npl] = bi.Aplus
    A[npl:, npl:] = Ainv
    B = np.vstack([bi.Bplus, Bm])
    C = np.hstack([bi.Cplus, bi.Cminus])
    return StateSpaceSystem(A, B, C, bi.D)


class AugmentedSystem:
    """An epsilon-augmented system together with its index bookkeeping.

    The augmented KYP certificate lives on the same state space as the base
    system; deleting the rows/columns of the added epsilon-input block in the
    augmented KYP inequality reproduces the strict inequality of the base.
    """

    def __init__(self, base, system, epsilon, m_orig, p_orig):
        self.base = base
        self.system = system
        self.epsilon = float(epsilon)
        self.m_orig = int(m_orig)
        self.p_orig = int(p_orig)
        self.original_input_slice = slice(0, self.m_orig)
        self.original_output_slice = slice(0, self.p_orig)

    def __repr__(self):
        return f"AugmentedSystem(epsilon={self.epsilon:g}, base={self.base!r})"


def augment_epsilon(sys: StateSpaceSystem, eps: float) -> AugmentedSystem:
    """Pad (B, C, D) with epsilon-identities; the state operator is untouched.

    Input space becomes U + X, output space Y + X + U, so the augmented
    system is exactly controllable and observable in one step.
    """
    if not eps > 0:
        raise NonPositiveEpsilon(f"eps must be > 0, got {eps}")
    n, m, p = sys.n, sys.m, sys.p
    eyeN = np.eye(n, dtype=np.complex128)
    B_e = np.hstack([sys.B, eps * eyeN])
    C_e = np.vstack([sys.C, eps * eyeN, np.zeros((m, n), dtype=np.complex128)])
    D_e = np.zeros((p + n + m, m + n), dtype=np.complex128)
    D_e[:p, :m] = sys.D
    D_e[p + n:, :m] = eps * np.eye(m)
    return AugmentedSystem(sys, StateSpaceSystem(sys.A, B_e, C_e, D_e), eps, m, p)


def augment_epsilon_bicausal(bi: BicausalRealization, eps: float) -> AugmentedSystem:
    """Epsilon-augment both members of a bicausal pair.

    The shared input space becomes U + X_minus + X_plus and the shared output
    space Y + X_minus + X_plus + U, mirroring the dichotomous augmentation
    blockwise.
    """
    if not eps > 0:
        raise NonPositiveEpsilon(f"eps must be > 0, got {eps}")
    nm, npl, m, p = bi.dim_minus, bi.dim_plus, bi.m, bi.p
    zeros = np.zeros
    Bm_e = np.hstack([bi.Bminus, eps * np.eye(nm), zeros((nm, npl))]).astype(np.complex128)
    Bp_e = np.hstack([bi.Bplus, zeros((npl, nm)), eps * np.eye(npl)]).astype(np.complex128)
    Cm_e = np.vstack([bi.Cminus, eps * np.eye(nm), zeros((npl, nm)),
                      zeros((m, nm))]).astype(np.complex128)
    Cp_e = np.vstack([bi.Cplus, zeros((nm, npl)), eps * np.eye(npl),
                      zeros((m, npl))]).astype(np.complex128)
    D_e = zeros((p + nm + npl + m, m + nm + npl), dtype=np.complex128)
    D_e[:p, :m] = bi.D
    D_e[p + nm + npl:, :m] = eps * np.eye(m)
    aug = BicausalRealization(bi.Aplus, Bp_e, Cp_e, D_e, bi.Aminus, Bm_e, Cm_e)
    return AugmentedSystem(bi, aug, eps, m, p)
