"""Transfer functions on the unit circle and truncated Laurent machinery.

All truncations share a half-width N: signal indices run over [-N, N-1] and
Laurent coefficients over [-2N, 2N].  Discarded coefficients are covered by a
certified geometric tail bound c * rho^N / (1 - rho).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import resolve_tol
from .errors import PoleProximity
from .systems import BicausalRealization, DichotomousDecomposition, StateSpaceSystem

__all__ = [
    "TruncationWindow",
    "LaurentSlice",
    "OperatorQuadruple",
    "tail_envelope",
    "default_window",
    "eval_transfer",
    "laurent_coeff",
    "laurent_slice",
    "build_laurent",
    "build_quadruple",
    "hinf_norm",
    "gain_profile",
    "write_gain_csv",
]

_TAIL_TARGET = 1e-10
_MAX_WINDOW = 4096


@dataclass(frozen=True)
class TruncationWindow:
    """Half-width N of the index window [-N, N-1] plus a geometric envelope.

    The certified tail is the geometric remainder c rho^N / (1 - rho) floored
    at the roundoff scale of the envelope: float arithmetic cannot certify a
    truncation below machine precision times the coefficient mass.
    """

    N: int
    c: float
    rho: float

    @property
    def tail_bound(self) -> float:
        eps = np.finfo(np.float64).eps
        if self.rho <= 0.0:
            return 8.0 * eps * (1.0 + self.c)
        geo = self.c * self.rho ** self.N / (1.0 - self.rho)
        return geo + 8.0 * eps * (1.0 + self.c / (1.0 - self.rho))


def _prop(obj):
    if isinstance(obj, (DichotomousDecomposition, BicausalRealization)):
        return obj._prop()
    raise TypeError(f"expected a decomposition or bicausal realization, got {type(obj)!r}")


def _rho_pair(obj):
    rm, rp = obj.rho()
    return rm, rp


def tail_envelope(obj, k0: int = 50):
    """Geometric envelope (c, rho) with ||F_k|| <= c rho^|k| for computed k.

    rho is the slower of the two half-line decay rates inflated by a tenth of
    the gap to 1; c is calibrated on the first k0 coefficients.
    """
    rm, rp = _rho_pair(obj)
    base = max(rm, rp)
    rho = base + (1.0 - base) / 10.0
    table = _coeff_table(obj, k0)
    c = _envelope_constant(table, k0, rho)
    return c, rho


def _envelope_constant(table, K, rho):
    if table.shape[1] == 0 or table.shape[2] == 0:
        return 0.0
    norms = _kernels.sigma_max_sweep(table)
    ks = np.abs(np.arange(-K, K + 1))
    with np.errstate(under="ignore"):
        denom = rho ** ks if rho > 0.0 else np.zeros_like(ks, dtype=float)
    c = 0.0
    ok = (norms > 0.0) & (denom > 0.0)
    if ok.any():
        c = float((norms[ok] / denom[ok]).max())
    under = (norms > 0.0) & (denom == 0.0)
    if under.any():
        c = max(c, float(norms[under].max()))
    return c


def default_window(obj) -> TruncationWindow:
    """Window sized so the relative geometric tail is at most 1e-10."""
    c, rho = tail_envelope(obj)
    if rho <= 0.0:
        return TruncationWindow(8, c, rho)
    N = int(math.ceil(math.log(_TAIL_TARGET) / math.log(rho)))
    if N > _MAX_WINDOW:
        warnings.warn(f"window capped at {_MAX_WINDOW} (wanted {N}); "
                      "tail bound above target")
        N = _MAX_WINDOW
    return TruncationWindow(max(N, 8), c, rho)


def _coeff_table(obj, K: int):
    """Laurent coefficients F_k for k in [-K, K] as a (2K+1, p, m) array."""
    F0, CP, AP, BP, CM0, AM0, BM0 = _prop(obj)
    p, m = F0.shape
    table = np.zeros((2 * K + 1, p, m), dtype=np.complex128)
    table[K] = F0
    if K and AP.shape[0]:
        table[K + 1:] = _kernels.power_products(CP, AP, BP, K)
    if K and AM0.shape[0]:
        minus = _kernels.power_products(CM0, AM0, BM0, K)
        for k in range(1, K + 1):
            table[K - k] = minus[k - 1]
    return table


def laurent_coeff(obj, k: int):
    """Single Laurent coefficient F_k of the transfer function."""
    F0, CP, AP, BP, CM0, AM0, BM0 = _prop(obj)
    if k == 0:
        return F0.copy()
    if k > 0:
        if AP.shape[0] == 0:
            return np.zeros_like(F0)
        return CP @ np.linalg.matrix_power(AP, k - 1) @ BP
    if AM0.shape[0] == 0:
        return np.zeros_like(F0)
    return CM0 @ np.linalg.matrix_power(AM0, -k - 1) @ BM0


class LaurentSlice:
    """Coefficient table F_k, k in [-2N, 2N], with its truncation window."""

    def __init__(self, table, window: TruncationWindow):
        self.table = table
        self.window = window
        self.K = (table.shape[0] - 1) // 2

    def coeff(self, k: int):
        if abs(k) > self.K:
            raise IndexError(f"coefficient index {k} outside [-{self.K}, {self.K}]")
        return self.table[self.K + k]

    @property
    def coeffs(self):
        return {k: self.table[self.K + k] for k in range(-self.K, self.K + 1)}

    @property
    def tail_bound(self) -> float:
        return self.window.tail_bound


def laurent_slice(obj, N: int) -> LaurentSlice:
    """Coefficients for the window [-N, N-1]; envelope calibrated on the table."""
    if N < 1:
        raise ValueError("N must be >= 1")
    table = _coeff_table(obj, 2 * N)
    rm, rp = _rho_pair(obj)
    base = max(rm, rp)
    rho = base + (1.0 - base) / 10.0
    c = _envelope_constant(table, 2 * N, rho)
    return LaurentSlice(table, TruncationWindow(N, c, rho))


def build_laurent(obj, N: int):
    """Truncated Laurent matrix [F_{i-j}] for i, j in [-N, N-1]."""
    sl = laurent_slice(obj, N)
    return _kernels.block_toeplitz(sl.table, 2 * N, 2 * N, 0)


@dataclass
class OperatorQuadruple:
    """Corner compressions of the Laurent matrix to past/future spaces.

    Ttilde acts past->past, T future->future, Htilde future->past and
    H past->future; [[Ttilde, Htilde], [H, T]] reassembles the truncation.
    """

    Ttilde: np.ndarray
    T: np.ndarray
    Htilde: np.ndarray
    H: np.ndarray
    window: TruncationWindow


def build_quadruple(obj, N: int) -> OperatorQuadruple:
    sl = laurent_slice(obj, N)
    t = sl.table
    Tt = _kernels.block_toeplitz(t, N, N, 0)
    H = _kernels.block_toeplitz(t, N, N, N)
    Ht = _kernels.block_toeplitz(t, N, N, -N)
    return OperatorQuadruple(Tt.copy(), Tt, Ht, H, sl.window)


def _transfer_grid(obj, zs):
    zs = np.asarray(zs, dtype=np.complex128)
    if isinstance(obj, StateSpaceSystem):
        F = np.broadcast_to(obj.D, (len(zs),) + obj.D.shape).copy()
        if obj.n:
            F += _kernels.resolvent_sweep(obj.C, obj.A, obj.B, zs)
        return F
    F0, CP, AP, BP, CM0, AM0, BM0 = _prop(obj)
    F = np.broadcast_to(F0, (len(zs),) + F0.shape).copy()
    if AP.shape[0]:
        F += _kernels.resolvent_sweep(CP, AP, BP, zs)
    if AM0.shape[0]:
        F += _kernels.resolvent_sweep(CM0, AM0, BM0, 1.0 / zs)
    return F


def eval_transfer(obj, z: complex, tol=None):
    """Transfer function value F(z).

    Dichotomous and bicausal inputs are evaluated through the split form
    F_plus + F_minus, which stays well conditioned near the circle; a plain
    StateSpaceSystem is evaluated through the direct resolvent formula.
    """
    tol = resolve_tol(tol)
    z = complex(z)
    if isinstance(obj, StateSpaceSystem):
        if obj.n == 0:
            return obj.D.copy()
        lhs = np.eye(obj.n) - z * obj.A
        sv = np.linalg.svd(lhs, compute_uv=False)
        if sv[-1] <= tol * max(sv[0], 1.0):
            raise PoleProximity(f"(I - zA) nearly singular at z={z}")
        return obj.D + z * (obj.C @ np.linalg.solve(lhs, obj.B))
    F0, CP, AP, BP, CM0, AM0, BM0 = _prop(obj)
    out = F0.copy()
    if AP.shape[0]:
        lhs = np.eye(AP.shape[0]) - z * AP
        sv = np.linalg.svd(lhs, compute_uv=False)
        if sv[-1] <= tol * max(sv[0], 1.0):
            raise PoleProximity(f"(I - z A_plus) nearly singular at z={z}")
        out = out + z * (CP @ np.linalg.solve(lhs, BP))
    if AM0.shape[0]:
        # z^{-1} (I - z^{-1} A)^{-1} == (zI - A)^{-1}, valid down to z = 0
        lhs = z * np.eye(AM0.shape[0]) - AM0
        sv = np.linalg.svd(lhs, compute_uv=False)
        if sv[-1] <= tol * max(sv[0], 1.0):
            raise PoleProximity(f"(zI - A_minus-propagator) nearly singular at z={z}")
        out = out + CM0 @ np.linalg.solve(lhs, BM0)
    return out


def _sigma_vec(obj, thetas):
    F = _transfer_grid(obj, np.exp(1j * np.asarray(thetas)))
    return _kernels.sigma_max_sweep(F)


def hinf_norm(obj, tol=None, grid: int = 1024) -> float:
    """Supremum of sigma_max(F(z)) over the unit circle.

    Coarse uniform grid plus golden-section refinement around the five
    largest local grid maxima (all brackets advanced together, one batched
    evaluation per iteration); deterministic for fixed arguments.
    """
    tol = resolve_tol(tol)
    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    s = _sigma_vec(obj, thetas)
    if s.size == 0 or s.max() == 0.0:
        return 0.0
    is_max = (s >= np.roll(s, 1)) & (s >= np.roll(s, -1))
    cand = np.nonzero(is_max)[0]
    cand = cand[np.argsort(s[cand])[::-1][:5]]
    best = float(s.max())
    if cand.size == 0:
        return best
    h = 2.0 * np.pi / grid
    xtol = max(math.sqrt(max(tol, 1e-15)) * 0.1, 1e-12)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a = thetas[cand] - h
    b = thetas[cand] + h
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _sigma_vec(obj, c)
    fd = _sigma_vec(obj, d)
    for _ in range(80):
        if (b - a).max() <= xtol:
            break
        takec = fc > fd
        b = np.where(takec, d, b)
        a = np.where(takec, a, c)
        c_old = c
        c = np.where(takec, b - invphi * (b - a), d)
        d = np.where(takec, c_old, a + invphi * (b - a))
        fresh = np.where(takec, c, d)
        f_new = _sigma_vec(obj, fresh)
        fc_old = fc
        fc = np.where(takec, f_new, fd)
        fd = np.where(takec, fc_old, f_new)
    return max(best, float(fc.max()), float(fd.max()))


def gain_profile(obj, npoints: int = 1024):
    """(theta, sigma_max(F(e^{i theta}))) sampled uniformly on [0, 2 pi)."""
    thetas = np.linspace(0.0, 2.0 * np.pi, npoints, endpoint=False)
    F = _transfer_grid(obj, np.exp(1j * thetas))
    return thetas, _kernels.sigma_max_sweep(F)


def write_gain_csv(obj, path, npoints: int = 1024) -> None:
    """CSV of the gain profile, columns "theta,sigma_max", 15 significant digits."""
    thetas, sig = gain_profile(obj, npoints)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("theta,sigma_max\n")
        for t, s in zip(thetas, sig):
            fh.write(f"{t:.15g},{s:.15g}\n")
