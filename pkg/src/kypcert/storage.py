"""Extremal storage operators and KYP residuals.

The available-storage and required-supply certificates are assembled from
truncated Toeplitz/Hankel data: a defect factorization of the future (resp.
past) Toeplitz block, a Douglas factor carrying the observability operator,
and a least-norm controllability preimage.  Everything is expressed in split
coordinates [x_minus; x_plus]; certificates carry the similarity back to the
original coordinates.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import resolve_tol
from .errors import (
    NotContractive,
    NotExactlyControllable,
    NotExactlyMinimal,
    NotSelfadjoint,
    RangeViolation,
)
from .frequency import default_window, hinf_norm, laurent_slice
from .systems import (
    BicausalRealization,
    DichotomousDecomposition,
    StateSpaceSystem,
    split_state_space,
)

__all__ = [
    "GramianData",
    "MinimalityReport",
    "DouglasFactor",
    "KypCertificate",
    "build_gramians",
    "check_exact_minimality",
    "defect",
    "douglas_factor",
    "compute_Ha",
    "compute_Hr",
    "kyp_residual",
    "bicausal_kyp_residual",
    "inertia",
    "certificate_to_json",
    "certificate_from_json",
    "write_certificate",
    "read_certificate",
]

_KERNEL_CUTOFF = 1e-10


@dataclass
class GramianData:
    """Truncated controllability/observability blocks at a shared window.

    WcPlus maps past inputs to x_plus(0) (columns ordered j = -N..-1),
    WcMinus maps future inputs to x_minus(0) (columns j = 0..N-1); WoPlus
    stacks future output rows i = 0..N-1 and WoMinus past rows i = -N..-1.
    """

    WcPlus: np.ndarray
    WcMinus: np.ndarray
    WoPlus: np.ndarray
    WoMinus: np.ndarray
    window: object
    sigma_c_plus: float
    sigma_c_minus: float
    sigma_o_plus: float
    sigma_o_minus: float


def _sigma_min(M) -> float:
    if M.shape[0] == 0:
        return np.inf
    if M.shape[1] == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])


def build_gramians(obj, N: int) -> GramianData:
    """Truncated W_c and W_o blocks of a dichotomous or bicausal system."""
    if N < 1:
        raise ValueError("N must be >= 1")
    F0, CP, AP, BP, CM0, AM0, BM0 = obj._prop()
    p, m = F0.shape
    nm, npl = AM0.shape[0], AP.shape[0]

    WcP = np.zeros((npl, N * m), dtype=np.complex128)
    WoP = np.zeros((N * p, npl), dtype=np.complex128)
    if npl:
        pc = _kernels.power_products(np.eye(npl), AP, BP, N)
        po = _kernels.power_products(CP, AP, np.eye(npl), N)
        for c in range(N):
            WcP[:, c * m:(c + 1) * m] = pc[N - 1 - c]
        for r in range(N):
            WoP[r * p:(r + 1) * p] = po[r]

    WcM = np.zeros((nm, N * m), dtype=np.complex128)
    WoM = np.zeros((N * p, nm), dtype=np.complex128)
    if nm:
        mc = _kernels.power_products(np.eye(nm), AM0, BM0, N)
        mo = _kernels.power_products(CM0, AM0, np.eye(nm), N)
        for c in range(N):
            WcM[:, c * m:(c + 1) * m] = mc[c]
        for r in range(N):
            WoM[r * p:(r + 1) * p] = mo[N - 1 - r]

    window = laurent_slice(obj, N).window
    return GramianData(WcP, WcM, WoP, WoM, window,
                       _sigma_min(WcP), _sigma_min(WcM),
                       _sigma_min(WoP.conj().T), _sigma_min(WoM.conj().T))


@dataclass
class MinimalityReport:
    controllable_plus: bool
    controllable_minus: bool
    observable_plus: bool
    observable_minus: bool
    margin_c_plus: float
    margin_c_minus: float
    margin_o_plus: float
    margin_o_minus: float

    @property
    def is_minimal(self) -> bool:
        return (self.controllable_plus and self.controllable_minus
                and self.observable_plus and self.observable_minus)


def check_exact_minimality(g: GramianData, tol=None) -> MinimalityReport:
    """Flag exact controllability/observability of each half at tolerance."""
    tol = resolve_tol(tol)
    return MinimalityReport(
        g.sigma_c_plus > tol, g.sigma_c_minus > tol,
        g.sigma_o_plus > tol, g.sigma_o_minus > tol,
        g.sigma_c_plus, g.sigma_c_minus, g.sigma_o_plus, g.sigma_o_minus)


def defect(T, tol=None):
    """PSD square root (I - T^* T)^{1/2} of a contraction.

    Negative eigenvalues of I - T^*T consistent with the sigma_max(T) <= 1+tol
    gate are clipped to zero; a larger norm raises NotContractive.
    """
    tol = resolve_tol(tol)
    T = np.asarray(T, dtype=np.complex128)
    ncols = T.shape[1]
    if T.shape[0] == 0 or ncols == 0:
        return np.eye(ncols, dtype=np.complex128)
    _, s, Vh = np.linalg.svd(T)
    if s[0] > 1.0 + tol:
        raise NotContractive(f"sigma_max(T) = {s[0]:.6g} > 1 + tol")
    d = np.ones(ncols)
    d[:len(s)] = np.sqrt(np.clip(1.0 - s ** 2, 0.0, None))
    V = Vh.conj().T
    return (V * d) @ V.conj().T


@dataclass
class DouglasFactor:
    """Solution X of Dop X = W with range control, X = pinv(Dop) W."""

    X: np.ndarray
    residual: float
    range_defect: float


def douglas_factor(Dop, W, tol=None) -> DouglasFactor:
    """Factor W through a PSD operator: X with Dop X ~= W, X = pinv(Dop) W.

    `range_defect` records the part of X outside the closure of range(Dop)
    (zero by construction on the pseudoinverse route, kept for monitoring);
    RangeViolation signals that W is not dominated by Dop at this window.
    """
    tol = resolve_tol(tol)
    Dop = np.asarray(Dop, dtype=np.complex128)
    W = np.asarray(W, dtype=np.complex128)
    lam, Q = np.linalg.eigh((Dop + Dop.conj().T) / 2.0)
    lam = np.clip(lam, 0.0, None)
    cutoff = _KERNEL_CUTOFF * max(float(lam.max(initial=0.0)), 1.0)
    w = Q.conj().T @ W
    inv = np.where(lam > cutoff, 1.0 / np.where(lam > cutoff, lam, 1.0), 0.0)
    X = Q @ (inv[:, None] * w)
    resid = float(np.linalg.norm(w[lam <= cutoff]))
    if resid > tol * max(np.linalg.norm(W), 1e-300):
        raise RangeViolation(
            f"Douglas residual {resid:.3e} > tol*||W|| "
            "(norm violation or window too small)")
    coeffs = Q.conj().T @ X
    outside = coeffs[lam <= cutoff]
    range_defect = float(np.linalg.norm(outside)) if outside.size else 0.0
    return DouglasFactor(X, resid, range_defect)


def inertia(H, tol=None):
    """Eigenvalue signature (n_plus, n_minus, n_zero) of a selfadjoint matrix."""
    tol = resolve_tol(tol)
    H = np.asarray(H, dtype=np.complex128)
    _check_selfadjoint(H, tol)
    if H.shape[0] == 0:
        return (0, 0, 0)
    ev = np.linalg.eigvalsh(H)
    return (int((ev > tol).sum()), int((ev < -tol).sum()),
            int(((ev >= -tol) & (ev <= tol)).sum()))


def _check_selfadjoint(H, tol):
    scale = 1.0 + (np.linalg.norm(H) if H.size else 0.0)
    if H.size and np.linalg.norm(H - H.conj().T) > max(tol, 1e-12) * scale:
        raise NotSelfadjoint("matrix is not selfadjoint at tolerance")


def kyp_residual(sys: StateSpaceSystem, H, eps: float = 0.0, tol=None):
    """Residual blockdiag(H, I_m) - M^* blockdiag(H, I_p) M - eps^2 I.

    PSD residual certifies the (strict, when eps > 0) KYP inequality for the
    system matrix M = [[A, B], [C, D]].
    """
    tol = resolve_tol(tol)
    H = np.asarray(H, dtype=np.complex128)
    _check_selfadjoint(H, tol)
    n, m, p = sys.n, sys.m, sys.p
    M = sys.system_matrix()
    left = np.zeros((n + m, n + m), dtype=np.complex128)
    left[:n, :n] = H
    left[n:, n:] = np.eye(m)
    mid = np.zeros((n + p, n + p), dtype=np.complex128)
    mid[:n, :n] = H
    mid[n:, n:] = np.eye(p)
    R = left - M.conj().T @ mid @ M
    if eps:
        R = R - eps ** 2 * np.eye(n + m)
    return (R + R.conj().T) / 2.0


def bicausal_kyp_residual(bi: BicausalRealization, H, eps: float = 0.0, tol=None):
    """Residual of the bicausal KYP inequality on x_minus + x_plus + u.

    H is the full selfadjoint block matrix [[H_minus, H_0], [H_0^*, H_plus]].
    The quadratic form is based at (x_minus(1), x_plus(0), u(0)); for eps > 0
    the strict penalty eps^2 (||A- x- + B- u||^2 + ||x+||^2 + ||u||^2) is
    subtracted.
    """
    tol = resolve_tol(tol)
    H = np.asarray(H, dtype=np.complex128)
    _check_selfadjoint(H, tol)
    nm, npl, m, p = bi.dim_minus, bi.dim_plus, bi.m, bi.p
    n = nm + npl
    Am, Bm, Cm = bi.Aminus, bi.Bminus, bi.Cminus
    Ap, Bp, Cp = bi.Aplus, bi.Bplus, bi.Cplus
    G = np.zeros((n + p, n + m), dtype=np.complex128)
    G[:nm, :nm] = np.eye(nm)
    G[nm:n, nm:n] = Ap
    G[nm:n, n:] = Bp
    G[n:, :nm] = Cm @ Am
    G[n:, nm:n] = Cp
    G[n:, n:] = bi.Dhat
    K = np.zeros((n + m, n + m), dtype=np.complex128)
    K[:nm, :nm] = Am
    K[:nm, n:] = Bm
    K[nm:n, nm:n] = np.eye(npl)
    K[n:, n:] = np.eye(m)
    HG = np.zeros((n + p, n + p), dtype=np.complex128)
    HG[:n, :n] = H
    HG[n:, n:] = np.eye(p)
    HK = np.zeros((n + m, n + m), dtype=np.complex128)
    HK[:n, :n] = H
    HK[n:, n:] = np.eye(m)
    R = K.conj().T @ HK @ K - G.conj().T @ HG @ G
    if eps:
        E = np.zeros((n + m, n + m), dtype=np.complex128)
        E[:nm, :nm] = Am.conj().T @ Am
        E[:nm, n:] = Am.conj().T @ Bm
        E[n:, :nm] = Bm.conj().T @ Am
        E[nm:n, nm:n] = np.eye(npl)
        E[n:, n:] = Bm.conj().T @ Bm + np.eye(m)
        R = R - eps ** 2 * E
    return (R + R.conj().T) / 2.0


@dataclass
class KypCertificate:
    """Selfadjoint KYP solution in split coordinates with its diagnostics.

    ``coordinates`` is the similarity T of the split; pull back to original
    coordinates via `pullback` (congruence preserves inertia and the residual
    sign).  For strict certificates the epsilon term is folded into the
    recorded residual spectrum and ``strict_margin`` stores eps^2.
    """

    H: np.ndarray
    residual_spectrum: np.ndarray
    inertia: tuple
    strict_margin: float
    coordinates: np.ndarray
    window_N: int
    tail_bound: float
    dim_minus: int
    dim_plus: int

    def h_blocks(self):
        nm = self.dim_minus
        return self.H[:nm, :nm], self.H[:nm, nm:], self.H[nm:, nm:]

    def pullback(self):
        Ti = np.linalg.inv(self.coordinates)
        return Ti.conj().T @ self.H @ Ti

    def is_valid(self, tol=None) -> bool:
        tol = resolve_tol(tol)
        if self.residual_spectrum.size == 0:
            return True
        return bool(self.residual_spectrum.min() >= -tol)


def _toeplitz_svd(obj, N):
    sl = laurent_slice(obj, N)
    T = _kernels.block_toeplitz(sl.table, N, N, 0)
    U, s, Vh = np.linalg.svd(T, full_matrices=False)
    return sl, T, U, s, Vh.conj().T


def _pinv_defect_apply(Q, d, W, tol, what):
    """pinv((I - TT^*)^{1/2}) W given the economy basis Q and spectrum d.

    The defect operator is Q diag(d) Q^* + (I - QQ^*): outside the singular
    basis the defect is the identity.  Returns (X, residual); the residual is
    the mass of W on defect kernel directions and triggers RangeViolation.
    """
    cutoff = _KERNEL_CUTOFF * max(float(d.max(initial=0.0)), 1.0)
    w = Q.conj().T @ W
    inv = np.where(d > cutoff, 1.0 / np.where(d > cutoff, d, 1.0), 0.0)
    X = W - Q @ w + Q @ (inv[:, None] * w)
    resid = float(np.linalg.norm(w[d <= cutoff]))
    if resid > tol * max(np.linalg.norm(W), 1e-300):
        raise RangeViolation(
            f"{what}: Douglas residual {resid:.3e} > tol*||W|| "
            "(norm violation or window too small)")
    return X, resid


def _apply_defect(Q, d, M):
    """(I - T^*T)^{1/2} M from the economy basis Q and spectrum d."""
    w = Q.conj().T @ M
    return M - Q @ w + Q @ (d[:, None] * w)


def _projector_basis(V, d, Wc):
    """Orthonormal basis of (D ker Wc)^perp = preimage of range(Wc^*) under D.

    D = V diag(d) V^* + (I - VV^*) with V the economy right-singular basis;
    the preimage splits into particular solutions over the nonzero spectrum
    (identity off the basis) plus all of ker D.
    """
    NM = V.shape[0]
    cutoff = _KERNEL_CUTOFF * max(float(d.max(initial=0.0)), 1.0)
    zero = d <= cutoff
    k = Wc.shape[0]
    if k == 0:
        basis = V[:, zero]
    else:
        G = Wc.conj().T                      # (NM, k), target range
        Rp = V.conj().T @ G
        if zero.any():
            Z0 = Rp[zero]
            _, s0, Vh0 = np.linalg.svd(Z0)
            rank = int((s0 > 1e-10 * max(float(s0[0]) if s0.size else 0.0, 1.0)).sum())
            Cb = Vh0.conj().T[:, rank:]      # admissible range combinations
            cols = []
            if Cb.shape[1]:
                GCb = G @ Cb
                w = Rp @ Cb
                part = GCb - V @ w + V[:, ~zero] @ (w[~zero] / d[~zero, None])
                cols.append(part)
            cols.append(V[:, zero])
            basis = np.hstack(cols) if cols else np.zeros((NM, 0), dtype=np.complex128)
        else:
            basis = G - V @ Rp + V @ (Rp / d[:, None])
    if basis.shape[1] == 0:
        return np.zeros((NM, 0), dtype=np.complex128)
    Ub, sb, _ = np.linalg.svd(basis, full_matrices=False)
    keep = sb > 1e-12 * max(float(sb[0]) if sb.size else 0.0, 1e-300)
    return Ub[:, keep]


def _dagger(W):
    """Right inverse W^*(W W^*)^{-1} of a surjective wide matrix."""
    if W.shape[0] == 0:
        return np.zeros((W.shape[1], 0), dtype=np.complex128)
    G = W @ W.conj().T
    return np.linalg.solve(G.conj().T, W).conj().T


def _prepare(obj, N, tol, hinf, require_minimal):
    tol = resolve_tol(tol)
    N = default_window(obj).N if N is None else int(N)
    if hinf is None:
        hinf = hinf_norm(obj, tol)
    if hinf > 1.0 + tol:
        raise NotContractive(f"hinf = {hinf:.6g} > 1 + tol")
    g = build_gramians(obj, N)
    report = check_exact_minimality(g, tol)
    if require_minimal and not report.is_minimal:
        raise NotExactlyMinimal(
            f"minimality margins (c+, c-, o+, o-) = ({report.margin_c_plus:.2e}, "
            f"{report.margin_c_minus:.2e}, {report.margin_o_plus:.2e}, "
            f"{report.margin_o_minus:.2e}) with tol {tol:.2e}")
    if not (report.controllable_plus and report.controllable_minus):
        # the controllability right inverses are required even without the
        # observability half of minimality
        raise NotExactlyControllable(
            f"controllability margins ({report.margin_c_plus:.2e}, "
            f"{report.margin_c_minus:.2e}) with tol {tol:.2e}")
    return tol, N, hinf, g


def _finish(obj, H, eps, N, tail, tol):
    H = (H + H.conj().T) / 2.0
    if isinstance(obj, DichotomousDecomposition):
        R = kyp_residual(split_state_space(obj), H, eps, tol)
        coords = obj.T
    else:
        R = bicausal_kyp_residual(obj, H, eps, tol)
        coords = np.eye(obj.n, dtype=np.complex128)
    spec = np.linalg.eigvalsh(R) if R.size else np.zeros(0)
    return KypCertificate(H, spec, inertia(H, tol), eps ** 2, coords,
                          N, tail, obj.dim_minus, obj.dim_plus)


def compute_Ha(obj, N: int = None, tol=None, hinf=None,
               require_minimal: bool = True) -> KypCertificate:
    """Available-storage certificate H_a of a contractive, exactly minimal system.

    Blockwise on [x_minus; x_plus]:

        H_a = [[-W^  D P_a D W^,   W^* D P_a T^* X],
               [ X^* T P_a D W^,   X^*(I - T P_a T^*) X]]

    with T the truncated future Toeplitz block, D its defect (I - T^*T)^{1/2},
    X the Douglas factor of W_o^+ through (I - T T^*)^{1/2}, W^ the least-norm
    right inverse of W_c^-, and P_a the projection onto (D ker W_c^-)^perp.
    """
    tol, N, hinf, g = _prepare(obj, N, tol, hinf, require_minimal)
    sl, T, U, s, V = _toeplitz_svd(obj, N)
    if s.size and s[0] > 1.0 + tol:
        raise NotContractive(f"sigma_max(Toeplitz block) = {s[0]:.6g} > 1 + tol")
    d = np.sqrt(np.clip(1.0 - s ** 2, 0.0, None))

    X, _ = _pinv_defect_apply(U, d, g.WoPlus, tol, "W_o^+")
    Qa = _projector_basis(V, d, g.WcMinus)
    Wd = _dagger(g.WcMinus)

    TX = T.conj().T @ X                       # T^* X, (Nm x n+)
    QaTX = Qa.conj().T @ TX
    DWd = _apply_defect(V, d, Wd)             # D_T W_c^-dagger, (Nm x n-)
    QaDW = Qa.conj().T @ DWd

    Hmm = -(QaDW.conj().T @ QaDW)
    Hmp = QaDW.conj().T @ QaTX
    Hpp = X.conj().T @ X - QaTX.conj().T @ QaTX
    H = np.block([[Hmm, Hmp], [Hmp.conj().T, Hpp]])
    return _finish(obj, H, 0.0, N, sl.window.tail_bound, tol)


def compute_Hr(obj, N: int = None, tol=None, hinf=None,
               require_minimal: bool = True) -> KypCertificate:
    """Required-supply certificate H_r; mirror of `compute_Ha`.

    Uses the past Toeplitz block (equal to the future block as a matrix), the
    Douglas factor of W_o^- and the right inverse of W_c^+, with P_r the
    projection onto (D ker W_c^+)^perp:

        H_r = [[-X^*(I - T~ P_r T~^*) X,  -X^* T~ P_r D W^],
               [-W^* D P_r T~^* X,         W^* D P_r D W^]]
    """
    tol, N, hinf, g = _prepare(obj, N, tol, hinf, require_minimal)
    sl, T, U, s, V = _toeplitz_svd(obj, N)
    if s.size and s[0] > 1.0 + tol:
        raise NotContractive(f"sigma_max(Toeplitz block) = {s[0]:.6g} > 1 + tol")
    d = np.sqrt(np.clip(1.0 - s ** 2, 0.0, None))

    X, _ = _pinv_defect_apply(U, d, g.WoMinus, tol, "W_o^-")
    Qr = _projector_basis(V, d, g.WcPlus)
    Wd = _dagger(g.WcPlus)

    TX = T.conj().T @ X
    QrTX = Qr.conj().T @ TX
    DWd = _apply_defect(V, d, Wd)
    QrDW = Qr.conj().T @ DWd

    Hmm = -(X.conj().T @ X) + QrTX.conj().T @ QrTX
    Hmp = -(QrTX.conj().T @ QrDW)
    Hpp = QrDW.conj().T @ QrDW
    H = np.block([[Hmm, Hmp], [Hmp.conj().T, Hpp]])
    return _finish(obj, H, 0.0, N, sl.window.tail_bound, tol)


# ------------------------------------------------------------- JSON export

def _f(x: float) -> float:
    return float(f"{float(x):.15g}")


def _encode_cmat(M):
    M = np.asarray(M, dtype=np.complex128)
    return [[[_f(v.real), _f(v.imag)] for v in row] for row in M]


def _decode_cmat(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows],
                    dtype=np.complex128) if rows else np.zeros((0, 0), np.complex128)


def certificate_to_json(cert: KypCertificate) -> dict:
    return {
        "H": _encode_cmat(cert.H),
        "residual_spectrum": [_f(v) for v in cert.residual_spectrum],
        "inertia": list(cert.inertia),
        "epsilon": _f(np.sqrt(cert.strict_margin)),
        "window_N": cert.window_N,
        "tail_bound": _f(cert.tail_bound),
        "coordinates_T": _encode_cmat(cert.coordinates),
        "dim_minus": cert.dim_minus,
        "dim_plus": cert.dim_plus,
    }


def certificate_from_json(doc: dict) -> KypCertificate:
    eps = float(doc["epsilon"])
    return KypCertificate(
        H=_decode_cmat(doc["H"]),
        residual_spectrum=np.asarray(doc["residual_spectrum"], dtype=float),
        inertia=tuple(doc["inertia"]),
        strict_margin=eps ** 2,
        coordinates=_decode_cmat(doc["coordinates_T"]),
        window_N=int(doc["window_N"]),
        tail_bound=float(doc["tail_bound"]),
        dim_minus=int(doc["dim_minus"]),
        dim_plus=int(doc["dim_plus"]),
    )


def write_certificate(cert: KypCertificate, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(certificate_to_json(cert), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_certificate(path) -> KypCertificate:
    with open(path, "r", encoding="ascii") as fh:
        return certificate_from_json(json.load(fh))
