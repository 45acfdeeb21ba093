"""Finite-window trajectories with certified edge decay.

Square-summable trajectories over all of Z are emulated on finite windows:
the window is padded until the state norm at both edges is below tolerance,
which is recorded as ``tail_decay``.  States are kept in split coordinates
``[x_minus; x_plus]``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import resolve_tol
from .errors import NotExactlyControllable, NotSelfadjoint, StateMismatch, WindowTooSmall
from .systems import BicausalRealization, DichotomousDecomposition

__all__ = [
    "Trajectory",
    "simulate",
    "simulate_bicausal",
    "patch",
    "interpolate_state",
    "interpolate_bicausal",
    "dissipation_residuals",
    "trajectory_residuals",
    "trajectory_to_csv",
    "trajectory_from_csv",
]


@dataclass
class Trajectory:
    """Signals on the window [n0, n1]; x carries one extra step x(n1+1)."""

    n0: int
    u: np.ndarray            # (L, m)
    x: np.ndarray            # (L+1, n), split coordinates
    y: np.ndarray            # (L, p)
    dim_minus: int
    tail_decay: float = 0.0

    @property
    def n1(self) -> int:
        return self.n0 + len(self.u) - 1

    def u_at(self, n: int):
        if self.n0 <= n <= self.n1:
            return self.u[n - self.n0]
        return np.zeros(self.u.shape[1], dtype=np.complex128)

    def x_at(self, n: int):
        if self.n0 <= n <= self.n1 + 1:
            return self.x[n - self.n0]
        return np.zeros(self.x.shape[1], dtype=np.complex128)

    def y_at(self, n: int):
        if self.n0 <= n <= self.n1:
            return self.y[n - self.n0]
        return np.zeros(self.y.shape[1], dtype=np.complex128)

    def l2_input(self) -> float:
        return float(np.linalg.norm(self.u))

    def l2_output(self) -> float:
        return float(np.linalg.norm(self.y))


def _pad_steps(obj, tol: float) -> int:
    rm, rp = obj.rho()
    rho = max(rm, rp)
    if rho <= 0.0:
        return max(obj.n + 1, 4)
    return min(max(int(math.ceil(math.log(tol) / math.log(rho))), 4), 100000)


def _run(obj, u, n0, tol, pad):
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[1] != obj.m:
        raise ValueError(f"input must be (L, {obj.m}), got {u.shape}")
    pad = _pad_steps(obj, tol) if pad is None else int(pad)
    L = u.shape[0] + 2 * pad
    uf = np.zeros((L, obj.m), dtype=np.complex128)
    uf[pad:pad + u.shape[0]] = u

    _, _, AP, BP, _, AM0, BM0 = obj._prop()
    nm, npl = obj.dim_minus, obj.dim_plus
    xp = _kernels.recur_forward(AP, BP, uf, np.zeros(npl, dtype=np.complex128))
    xm = _kernels.recur_backward(AM0, BM0, uf, np.zeros(nm, dtype=np.complex128))
    x = np.hstack([xm, xp])

    y = uf @ obj.D.T
    if nm:
        y = y + xm[:-1] @ obj.Cminus.T
    if npl:
        y = y + xp[:-1] @ obj.Cplus.T

    xscale = max(1.0, float(np.abs(x).max()) if x.size else 0.0)
    tail = max(np.linalg.norm(x[0]), np.linalg.norm(x[-1])) if x.size else 0.0
    traj = Trajectory(n0 - pad, uf, x, y, nm, float(tail))
    if tail > tol * xscale:
        raise WindowTooSmall(
            f"edge state norm {tail:.3e} above tol*scale {tol * xscale:.3e}; "
            "increase the padding")
    return traj


def simulate(dec: DichotomousDecomposition, u, n0: int = 0, tol=None, pad=None) -> Trajectory:
    """Unique square-summable trajectory driven by a finitely supported input.

    The stable state runs forward from zero at the left edge; the antistable
    state runs backward from zero at the right edge.  The window is the input
    support extended by enough steps for the states to decay below `tol`.
    """
    return _run(dec, u, n0, resolve_tol(tol), pad)


def simulate_bicausal(bi: BicausalRealization, u, n0: int = 0, tol=None, pad=None) -> Trajectory:
    """As `simulate`, with the anticausal subsystem recursed backward in time."""
    return _run(bi, u, n0, resolve_tol(tol), pad)


def patch(t1: Trajectory, t2: Trajectory, tol=None) -> Trajectory:
    """Concatenate the past of t1 with the future of t2 at time zero.

    Requires matching states at the seam: u, y switch at n = 0, the state at
    n <= 0 comes from t1 and at n > 0 from t2.
    """
    tol = resolve_tol(tol)
    if t1.u.shape[1] != t2.u.shape[1] or t1.x.shape[1] != t2.x.shape[1] \
            or t1.y.shape[1] != t2.y.shape[1] or t1.dim_minus != t2.dim_minus:
        raise ValueError("trajectories have incompatible dimensions")
    x1, x2 = t1.x_at(0), t2.x_at(0)
    scale = 1.0 + max(np.linalg.norm(x1), np.linalg.norm(x2))
    if np.linalg.norm(x1 - x2) > tol * scale:
        raise StateMismatch(
            f"state mismatch at 0: {np.linalg.norm(x1 - x2):.3e} > tol*scale")
    n0 = min(t1.n0, t2.n0)
    n1 = max(t1.n1, t2.n1)
    L = n1 - n0 + 1
    u = np.array([t1.u_at(n) if n < 0 else t2.u_at(n) for n in range(n0, n1 + 1)])
    y = np.array([t1.y_at(n) if n < 0 else t2.y_at(n) for n in range(n0, n1 + 1)])
    x = np.array([t1.x_at(n) if n <= 0 else t2.x_at(n) for n in range(n0, n1 + 2)])
    tail = max(np.linalg.norm(x[0]), np.linalg.norm(x[-1]))
    return Trajectory(n0, u.reshape(L, -1), x.reshape(L + 1, -1),
                      y.reshape(L, -1), t1.dim_minus, float(tail))


def _least_norm(W, target, sigma_min, tol, what):
    if W.shape[0] == 0:
        return np.zeros(W.shape[1], dtype=np.complex128)
    if not sigma_min > tol:
        raise NotExactlyControllable(
            f"{what}: smallest singular value {sigma_min:.3e} <= tol {tol:.3e}")
    sol, *_ = np.linalg.lstsq(W, target, rcond=1e-10)
    return sol


def interpolate_state(dec: DichotomousDecomposition, x0, u0, N: int, tol=None) -> Trajectory:
    """Square-summable trajectory through a prescribed (x(0), u(0)) pair.

    Past input is the least-norm preimage of the stable component of x0; the
    antistable component is steered by solving for the next antistable state
    and taking the least-norm preimage over future inputs.
    """
    from .storage import build_gramians

    tol = resolve_tol(tol)
    x0 = np.asarray(x0, dtype=np.complex128).reshape(-1)
    u0 = np.asarray(u0, dtype=np.complex128).reshape(-1)
    nm = dec.dim_minus
    g = build_gramians(dec, N)
    u_minus = _least_norm(g.WcPlus, x0[nm:], g.sigma_c_plus, tol, "W_c^+")
    if nm:
        # next antistable state: solving x- = A-^{-1} x'- - A-^{-1} B- u0
        x_prime = dec.Aminus @ x0[:nm] + dec.Bminus @ u0
    else:
        x_prime = np.zeros(0, dtype=np.complex128)
    u_plus = _least_norm(g.WcMinus, x_prime, g.sigma_c_minus, tol, "W_c^-")
    return _assemble_and_run(dec, u_minus, u0, u_plus, N, tol, simulate)


def interpolate_bicausal(bi: BicausalRealization, x_minus, x_plus, u0, N: int,
                         tol=None) -> Trajectory:
    """Trajectory with x_minus(1), x_plus(0) and u(0) prescribed.

    The anticausal state is pinned at time 1 rather than 0 since the
    anticausal state operator need not be invertible.
    """
    from .storage import build_gramians

    tol = resolve_tol(tol)
    x_minus = np.asarray(x_minus, dtype=np.complex128).reshape(-1)
    x_plus = np.asarray(x_plus, dtype=np.complex128).reshape(-1)
    u0 = np.asarray(u0, dtype=np.complex128).reshape(-1)
    g = build_gramians(bi, N)
    u_minus = _least_norm(g.WcPlus, x_plus, g.sigma_c_plus, tol, "W_c^+")
    u_plus = _least_norm(g.WcMinus, x_minus, g.sigma_c_minus, tol, "W_c^-")
    return _assemble_and_run(bi, u_minus, u0, u_plus, N, tol, simulate_bicausal)


def _assemble_and_run(obj, u_minus, u0, u_plus, N, tol, runner):
    m = obj.m
    u = np.zeros((2 * N + 1, m), dtype=np.complex128)
    u[:N] = u_minus.reshape(N, m)          # times -N .. -1
    u[N] = u0                              # time 0
    u[N + 1:] = u_plus.reshape(N, m)       # times 1 .. N
    return runner(obj, u, n0=-N, tol=tol)


def dissipation_residuals(H, traj: Trajectory, eps: float = 0.0, tol=None):
    """Per-step slack of the (strict) energy-balance relation along a trajectory.

    r(k) = (1 - eps^2)||u(k)||^2 - ||y(k)||^2 - S(x(k+1)) + S(x(k))
           - eps^2 ||x(k)||^2  with  S(x) = <H x, x>.

    Nonnegative residuals certify the storage inequality along the window.
    """
    tol = resolve_tol(tol)
    H = np.asarray(H, dtype=np.complex128)
    scale = 1.0 + np.linalg.norm(H)
    if np.linalg.norm(H - H.conj().T) > max(tol, 1e-12) * scale:
        raise NotSelfadjoint("H is not selfadjoint at tolerance")
    u, x, y = traj.u, traj.x, traj.y
    s = np.real(np.einsum("ki,ij,kj->k", x.conj(), H, x))
    uu = np.sum(np.abs(u) ** 2, axis=1)
    yy = np.sum(np.abs(y) ** 2, axis=1)
    xx = np.sum(np.abs(x[:-1]) ** 2, axis=1)
    return (1.0 - eps ** 2) * uu - yy - s[1:] + s[:-1] - eps ** 2 * xx


def trajectory_residuals(obj, traj: Trajectory):
    """Max state- and output-equation residuals of a trajectory (oracle check)."""
    nm = traj.dim_minus
    xm, xp = traj.x[:, :nm], traj.x[:, nm:]
    u, y = traj.u, traj.y
    if isinstance(obj, DichotomousDecomposition):
        sres = 0.0
        if nm:
            r = xm[1:] - xm[:-1] @ obj.Aminus.T - u @ obj.Bminus.T
            sres = max(sres, float(np.abs(r).max()) if r.size else 0.0)
        if obj.dim_plus:
            r = xp[1:] - xp[:-1] @ obj.Aplus.T - u @ obj.Bplus.T
            sres = max(sres, float(np.abs(r).max()) if r.size else 0.0)
        yhat = u @ obj.D.T
        if nm:
            yhat = yhat + xm[:-1] @ obj.Cminus.T
        if obj.dim_plus:
            yhat = yhat + xp[:-1] @ obj.Cplus.T
    else:
        sres = 0.0
        if nm:
            r = xm[:-1] - xm[1:] @ obj.Aminus.T - u @ obj.Bminus.T
            sres = max(sres, float(np.abs(r).max()) if r.size else 0.0)
        if obj.dim_plus:
            r = xp[1:] - xp[:-1] @ obj.Aplus.T - u @ obj.Bplus.T
            sres = max(sres, float(np.abs(r).max()) if r.size else 0.0)
        yhat = u @ obj.D.T
        if nm:
            yhat = yhat + xm[:-1] @ obj.Cminus.T
        if obj.dim_plus:
            yhat = yhat + xp[:-1] @ obj.Cplus.T
    ores = float(np.abs(y - yhat).max()) if y.size else 0.0
    return sres, ores


def map_states(traj: Trajectory, T) -> Trajectory:
    """The same trajectory with states mapped by x -> T x (u, y untouched).

    Used to move split-coordinate states back to original coordinates before
    checking a pulled-back certificate with a strict epsilon penalty, where
    the state-norm term is frame dependent.
    """
    T = np.asarray(T, dtype=np.complex128)
    x = traj.x @ T.T
    tail = max(np.linalg.norm(x[0]), np.linalg.norm(x[-1])) if x.size else 0.0
    return Trajectory(traj.n0, traj.u, x, traj.y, traj.dim_minus, float(tail))


def _fmt(z: complex) -> str:
    return f"{z.real:.15g}{z.imag:+.15g}j"


def trajectory_to_csv(traj: Trajectory, path_or_file) -> None:
    """Write columns "n, u_1..u_m, x_1..x_n, y_1..y_p".

    One extra row at n1+1 carries the terminal state with zero u and y cells.
    Accepts a path or an open text stream.
    """
    m = traj.u.shape[1]
    n = traj.x.shape[1]
    p = traj.y.shape[1]
    header = (["n"] + [f"u_{i+1}" for i in range(m)] + [f"x_{i+1}" for i in range(n)]
              + [f"y_{i+1}" for i in range(p)])
    zero = complex(0.0)

    def emit(fh):
        fh.write(",".join(header) + "\n")
        for k in range(len(traj.u) + 1):
            uk = traj.u[k] if k < len(traj.u) else np.full(m, zero)
            yk = traj.y[k] if k < len(traj.y) else np.full(p, zero)
            cells = [str(traj.n0 + k)]
            cells += [_fmt(v) for v in uk]
            cells += [_fmt(v) for v in traj.x[k]]
            cells += [_fmt(v) for v in yk]
            fh.write(",".join(cells) + "\n")

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", encoding="ascii") as fh:
            emit(fh)


def _split_header(header):
    names = [h.strip() for h in header.split(",")]
    if not names or names[0] != "n":
        raise ValueError("first CSV column must be the time index 'n'")
    m = sum(1 for h in names if h.startswith("u_"))
    n = sum(1 for h in names if h.startswith("x_"))
    p = sum(1 for h in names if h.startswith("y_"))
    return m, n, p


def trajectory_from_csv(path, dim_minus: int = 0) -> Trajectory:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    m, n, p = _split_header(lines[0])
    rows = [ln.split(",") for ln in lines[1:]]
    if len(rows) < 2:
        raise ValueError("trajectory CSV needs at least two rows")
    n0 = int(rows[0][0])
    L = len(rows) - 1
    u = np.zeros((L, m), dtype=np.complex128)
    x = np.zeros((L + 1, n), dtype=np.complex128)
    y = np.zeros((L, p), dtype=np.complex128)
    for k, row in enumerate(rows):
        vals = [complex(c) for c in row[1:]]
        if k < L:
            u[k] = vals[:m]
            y[k] = vals[m + n:m + n + p]
        x[k] = vals[m:m + n]
    tail = max(np.linalg.norm(x[0]), np.linalg.norm(x[-1])) if x.size else 0.0
    return Trajectory(n0, u, x, y, dim_minus, float(tail))
