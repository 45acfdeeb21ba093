"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The backend is chosen by the ``KYPCERT_BACKEND`` environment variable
("numba" or "numpy"); default is numba when importable.  All kernels take
and return complex128 arrays.  Callers are responsible for not passing
zero-sized state dimensions into the jitted paths.
"""

import os
import warnings

import numpy as np

__all__ = [
    "get_backend",
    "set_backend",
    "available_backends",
    "power_products",
    "block_toeplitz",
    "resolvent_sweep",
    "sigma_max_sweep",
    "recur_forward",
    "recur_backward",
]


# ---------------------------------------------------------------- numpy path

def _np_power_products(C, A, B, K):
    p, m = C.shape[0], B.shape[1]
    out = np.empty((K, p, m), dtype=np.complex128)
    W = B.copy()
    for k in range(K):
        out[k] = C @ W
        W = A @ W
    return out


def _np_block_toeplitz(table, nrows, ncols, d0):
    K = (table.shape[0] - 1) // 2
    p, m = table.shape[1], table.shape[2]
    r = np.arange(nrows)[:, None]
    c = np.arange(ncols)[None, :]
    big = table[K + d0 + r - c]            # (nrows, ncols, p, m)
    return np.ascontiguousarray(big.transpose(0, 2, 1, 3).reshape(nrows * p, ncols * m))


def _np_resolvent_sweep(C, A, B, zs):
    n = A.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    lhs = eye[None, :, :] - zs[:, None, None] * A[None, :, :]
    sol = np.linalg.solve(lhs, np.broadcast_to(B, (len(zs),) + B.shape))
    return zs[:, None, None] * (C[None, :, :] @ sol)


def _np_sigma_max_sweep(F):
    return np.linalg.svd(F, compute_uv=False)[:, 0]


def _np_recur_forward(M, G, u, x0):
    L = u.shape[0]
    x = np.empty((L + 1, M.shape[0]), dtype=np.complex128)
    x[0] = x0
    for k in range(L):
        x[k + 1] = M @ x[k] + G @ u[k]
    return x


def _np_recur_backward(M, G, u, xT):
    L = u.shape[0]
    x = np.empty((L + 1, M.shape[0]), dtype=np.complex128)
    x[L] = xT
    for k in range(L - 1, -1, -1):
        x[k] = M @ x[k + 1] + G @ u[k]
    return x


_NUMPY_IMPL = {
    "power_products": _np_power_products,
    "block_toeplitz": _np_block_toeplitz,
    "resolvent_sweep": _np_resolvent_sweep,
    "sigma_max_sweep": _np_sigma_max_sweep,
    "recur_forward": _np_recur_forward,
    "recur_backward": _np_recur_backward,
}


# ---------------------------------------------------------------- numba path

def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def nb_power_products(C, A, B, K):
        p = C.shape[0]
        m = B.shape[1]
        out = np.empty((K, p, m), dtype=np.complex128)
        W = B.copy()
        for k in range(K):
            out[k] = C @ W
            W = A @ W
        return out

    @njit(cache=True)
    def nb_block_toeplitz(table, nrows, ncols, d0):
        K = (table.shape[0] - 1) // 2
        p = table.shape[1]
        m = table.shape[2]
        out = np.empty((nrows * p, ncols * m), dtype=np.complex128)
        for r in range(nrows):
            for c in range(ncols):
                blk = table[K + d0 + r - c]
                out[r * p:(r + 1) * p, c * m:(c + 1) * m] = blk
        return out

    @njit(cache=True)
    def nb_resolvent_sweep(C, A, B, zs):
        n = A.shape[0]
        nz = zs.shape[0]
        out = np.empty((nz, C.shape[0], B.shape[1]), dtype=np.complex128)
        eye = np.eye(n, dtype=np.complex128)
        for i in range(nz):
            sol = np.linalg.solve(eye - zs[i] * A, B)
            out[i] = zs[i] * (C @ sol)
        return out

    @njit(cache=True)
    def nb_sigma_max_sweep(F):
        nz = F.shape[0]
        out = np.empty(nz, dtype=np.float64)
        for i in range(nz):
            s = np.linalg.svd(F[i].copy(), full_matrices=False)[1]
            out[i] = s[0]
        return out

    @njit(cache=True)
    def nb_recur_forward(M, G, u, x0):
        L = u.shape[0]
        x = np.empty((L + 1, M.shape[0]), dtype=np.complex128)
        x[0] = x0
        for k in range(L):
            x[k + 1] = M @ x[k] + G @ u[k]
        return x

    @njit(cache=True)
    def nb_recur_backward(M, G, u, xT):
        L = u.shape[0]
        x = np.empty((L + 1, M.shape[0]), dtype=np.complex128)
        x[L] = xT
        for k in range(L - 1, -1, -1):
            x[k] = M @ x[k + 1] + G @ u[k]
        return x

    return {
        "power_products": nb_power_products,
        "block_toeplitz": nb_block_toeplitz,
        "resolvent_sweep": nb_resolvent_sweep,
        "sigma_max_sweep": nb_sigma_max_sweep,
        "recur_forward": nb_recur_forward,
        "recur_backward": nb_recur_backward,
    }


_IMPLS = {"numpy": _NUMPY_IMPL}
_active = "numpy"


def _init_backend():
    global _active
    requested = os.environ.get("KYPCERT_BACKEND", "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        warnings.warn(f"unknown KYPCERT_BACKEND={requested!r}; using numba")
        requested = "numba"
    if requested == "numba":
        try:
            _IMPLS["numba"] = _build_numba_impl()
            _active = "numba"
        except ImportError:
            warnings.warn("numba unavailable; falling back to the numpy backend")
            _active = "numpy"
    else:
        _active = "numpy"


def available_backends():
    if "numba" not in _IMPLS:
        try:
            _IMPLS["numba"] = _build_numba_impl()
        except ImportError:
            pass
    return sorted(_IMPLS)


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in available_backends():
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    _active = name


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def power_products(C, A, B, K):
    """Stack of C @ A^k @ B for k = 0..K-1, shape (K, rows(C), cols(B))."""
    C, A, B = _c(C), _c(A), _c(B)
    if K == 0 or A.shape[0] == 0 or C.shape[0] == 0 or B.shape[1] == 0:
        return np.zeros((K, C.shape[0], B.shape[1]), dtype=np.complex128)
    return _IMPLS[_active]["power_products"](C, A, B, K)


def block_toeplitz(table, nrows, ncols, d0=0):
    """Block matrix with (r, c) block table[K + d0 + r - c]; table is (2K+1, p, m)."""
    table = _c(table)
    p, m = table.shape[1], table.shape[2]
    if nrows * p == 0 or ncols * m == 0:
        return np.zeros((nrows * p, ncols * m), dtype=np.complex128)
    return _IMPLS[_active]["block_toeplitz"](table, nrows, ncols, d0)


def resolvent_sweep(C, A, B, zs):
    """Stack of z * C (I - z A)^{-1} B over the points zs."""
    zs = np.ascontiguousarray(zs, dtype=np.complex128)
    C, A, B = _c(C), _c(A), _c(B)
    if A.shape[0] == 0 or C.shape[0] == 0 or B.shape[1] == 0:
        return np.zeros((len(zs), C.shape[0], B.shape[1]), dtype=np.complex128)
    return _IMPLS[_active]["resolvent_sweep"](C, A, B, zs)


def sigma_max_sweep(F):
    """Largest singular value of each slice of a (nz, p, m) stack."""
    F = _c(F)
    if F.shape[1] == 0 or F.shape[2] == 0:
        return np.zeros(F.shape[0])
    return _IMPLS[_active]["sigma_max_sweep"](F)


def recur_forward(M, G, u, x0):
    """x[k+1] = M x[k] + G u[k] with x[0] = x0; returns (len(u)+1, n)."""
    M, G, u = _c(M), _c(G), _c(u)
    x0 = np.ascontiguousarray(x0, dtype=np.complex128)
    n = M.shape[0]
    if n == 0:
        return np.zeros((u.shape[0] + 1, 0), dtype=np.complex128)
    if u.shape[1] == 0:
        return _free_forward(M, x0, u.shape[0])
    return _IMPLS[_active]["recur_forward"](M, G, u, x0)


def recur_backward(M, G, u, xT):
    """x[k] = M x[k+1] + G u[k] with x[len(u)] = xT; returns (len(u)+1, n)."""
    M, G, u = _c(M), _c(G), _c(u)
    xT = np.ascontiguousarray(xT, dtype=np.complex128)
    n = M.shape[0]
    if n == 0:
        return np.zeros((u.shape[0] + 1, 0), dtype=np.complex128)
    if u.shape[1] == 0:
        out = _free_forward(M, xT, u.shape[0])
        return out[::-1].copy()
    return _IMPLS[_active]["recur_backward"](M, G, u, xT)


def _free_forward(M, x0, L):
    x = np.empty((L + 1, M.shape[0]), dtype=np.complex128)
    x[0] = x0
    for k in range(L):
        x[k + 1] = M @ x[k]
    return x


_init_backend()
