"""Edge-preserving smoothing used to estimate illumination.

The default smoother is relative total variation (RTV) solved by iteratively
reweighted least squares: every round rebuilds per-edge penalty weights from
the current estimate and solves ``(I + lam * L_w) s = a`` where ``L_w`` is a
weighted 5-point graph Laplacian.  A separable Gaussian blur is available as
a cheap fallback.  Any callable ``f(a) -> s`` with the same shape can stand
in for either one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.ndimage import gaussian_filter

SMOOTHER_KINDS = ("rtv", "gaussian")


class SolverError(RuntimeError):
    """Raised when the iterative solve misses its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations

    def __reduce__(self):
        # survive the trip back from bench worker processes
        return type(self), (self.args[0], self.residual, self.iterations)


@dataclass(frozen=True)
class SmootherConfig:
    """Parameters for :func:`smooth`.

    ``lam`` is the RTV smoothness weight, ``sigma`` the window scale in
    pixels, ``eps_rtv`` the floor on windowed inherent variation and
    ``sharpness`` the floor on pixel-level variation.
    """

    kind: str = "rtv"
    lam: float = 0.01
    sigma: float = 3.0
    eps_rtv: float = 1e-3
    sharpness: float = 0.02
    iterations: int = 4
    solver_tol: float = 1e-5
    solver_max_iter: int = 1000

    def __post_init__(self):
        if self.kind not in SMOOTHER_KINDS:
            raise ValueError(f"unknown smoother kind {self.kind!r}; expected one of {SMOOTHER_KINDS}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.eps_rtv <= 0 or self.sharpness <= 0:
            raise ValueError("eps_rtv and sharpness must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.solver_tol <= 0 or self.solver_max_iter < 1:
            raise ValueError("solver_tol must be > 0 and solver_max_iter >= 1")


@dataclass(frozen=True)
class SparseSystem:
    """Symmetric diagonally dominant M-matrix system ``matrix @ x = rhs``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def check(self, atol: float = 1e-12) -> None:
        """Raise ``ValueError`` unless the matrix is a symmetric M-matrix."""
        a = sp.csr_matrix(self.matrix)
        if a.shape != (self.rhs.size, self.rhs.size):
            raise ValueError(f"matrix {a.shape} does not match rhs of length {self.rhs.size}")
        if a.nnz and abs(a - a.T).max() > atol:
            raise ValueError("matrix is not symmetric")
        diag = a.diagonal()
        off = a - sp.diags(diag)
        if off.nnz and off.data.max() > 0:
            raise ValueError("off-diagonal entries must be non-positive")
        offsum = np.asarray(abs(off).sum(axis=1)).ravel()
        if np.any(diag <= offsum):
            raise ValueError("matrix is not strictly diagonally dominant")


def _binary_exponent(b: np.ndarray) -> int:
    # shifting by this exponent is exact and keeps tiny right-hand sides
    # from underflowing the residual norm
    return int(np.frexp(np.max(np.abs(b)))[1])


@njit(cache=True)
def _pcg_csr(indptr, indices, data, b, x, tol, max_iter):
    n = b.size
    inv_diag = np.empty(n)
    for i in range(n):
        d = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i:
                d += data[k]
        inv_diag[i] = 1.0 / d
    bnorm = 0.0
    for i in range(n):
        bnorm += b[i] * b[i]
    bnorm = np.sqrt(bnorm)
    r = np.empty(n)
    z = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    rr = 0.0
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        r[i] = b[i] - acc
        rr += r[i] * r[i]
    res = np.sqrt(rr) / bnorm
    if res <= tol:
        return res, 0
    rz = 0.0
    for i in range(n):
        z[i] = inv_diag[i] * r[i]
        p[i] = z[i]
        rz += r[i] * z[i]
    for it in range(1, max_iter + 1):
        pq = 0.0
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * p[indices[k]]
            q[i] = acc
            pq += p[i] * acc
        alpha = rz / pq
        rr = 0.0
        rz_new = 0.0
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * q[i]
            rr += r[i] * r[i]
            z[i] = inv_diag[i] * r[i]
            rz_new += r[i] * z[i]
        res = np.sqrt(rr) / bnorm
        if res <= tol:
            # recompute the true residual; the recurrence can drift
            rr = 0.0
            for i in range(n):
                acc = 0.0
                for k in range(indptr[i], indptr[i + 1]):
                    acc += data[k] * x[indices[k]]
                r[i] = b[i] - acc
                rr += r[i] * r[i]
            res = np.sqrt(rr) / bnorm
            if res <= tol:
                return res, it
            rz_new = 0.0
            for i in range(n):
                z[i] = inv_diag[i] * r[i]
                rz_new += r[i] * z[i]
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return res, max_iter + 1


def solve_spd(system: SparseSystem, tol: float = 1e-5, max_iter: int = 1000, x0=None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradient.

    Returns ``x`` with ``||A x - b|| / ||b|| <= tol``; raises
    :class:`SolverError` if that is not reached in ``max_iter`` steps.
    Reductions run in a fixed sequential order, so results are
    bit-reproducible.
    """
    a = sp.csr_matrix(system.matrix)
    b = np.ascontiguousarray(system.rhs, dtype=np.float64)
    if not np.any(b):
        return np.zeros_like(b)
    e = _binary_exponent(b)
    b = np.ldexp(b, -e)
    x = np.zeros_like(b) if x0 is None else np.ldexp(np.asarray(x0, dtype=np.float64), -e)
    res, iters = _pcg_csr(
        a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.astype(np.float64),
        b, x, float(tol), int(max_iter),
    )
    if iters > max_iter:
        raise SolverError(
            f"conjugate gradient did not reach tol={tol:g} in {max_iter} iterations "
            f"(relative residual {res:.3e})",
            residual=float(res),
            iterations=max_iter,
        )
    return np.ldexp(x, e)


def forward_differences(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Horizontal and vertical forward differences, zero on the last column/row."""
    fx = np.zeros_like(s)
    fy = np.zeros_like(s)
    fx[:, :-1] = s[:, 1:] - s[:, :-1]
    fy[:-1, :] = s[1:, :] - s[:-1, :]
    return fx, fy


def rtv_weights(s: np.ndarray, sigma: float, eps: float, sharpness: float):
    """Per-edge IRLS weights of the RTV penalty at the current estimate ``s``.

    Weight = (window-spread reciprocal of windowed inherent variation) /
    (pixel-level variation).  ``wx[i, j]`` couples ``(i, j)`` with
    ``(i, j+1)`` and ``wy[i, j]`` couples ``(i, j)`` with ``(i+1, j)``; the
    entries with no neighbour are zero.
    """
    fx, fy = forward_differences(s)
    pixel = 1.0 / np.maximum(np.hypot(fx, fy), sharpness)
    gx = gaussian_filter(fx, sigma, mode="nearest")
    gy = gaussian_filter(fy, sigma, mode="nearest")
    ux = gaussian_filter(1.0 / np.maximum(np.abs(gx), eps), sigma, mode="nearest")
    uy = gaussian_filter(1.0 / np.maximum(np.abs(gy), eps), sigma, mode="nearest")
    wx = ux * pixel
    wy = uy * pixel
    wx[:, -1] = 0.0
    wy[-1, :] = 0.0
    return wx, wy


@dataclass(frozen=True)
class FivePointSystem:
    """``(I + lam * L_w) s = a`` stored as a 5-point stencil.

    ``east[k]`` is the coupling between pixel ``k`` and ``k + 1`` and
    ``south[k]`` between ``k`` and ``k + width`` (row-major order), both
    already scaled by ``lam``.
    """

    diag: np.ndarray
    east: np.ndarray
    south: np.ndarray
    width: int
    rhs: np.ndarray

    def to_sparse(self) -> SparseSystem:
        n, w = self.diag.size, self.width
        diagonals = [self.diag, -self.east[:-1], -self.east[:-1]]
        offsets = [0, 1, -1]
        if n > w:
            diagonals += [-self.south[:-w], -self.south[:-w]]
            offsets += [w, -w]
        matrix = sp.diags(diagonals, offsets, shape=(n, n), format="csr")
        return SparseSystem(matrix=matrix, rhs=self.rhs.copy())


def weighted_laplacian_system(a: np.ndarray, wx: np.ndarray, wy: np.ndarray, lam: float) -> FivePointSystem:
    """Assemble ``(I + lam * L_w) s = a`` in row-major pixel order."""
    w = a.shape[1]
    east = lam * wx.ravel()
    south = lam * wy.ravel()
    diag = 1.0 + east + south
    diag[1:] += east[:-1]
    diag[w:] += south[:-w]
    return FivePointSystem(diag=diag, east=east, south=south, width=w, rhs=a.ravel().copy())


@njit(cache=True)
def _stencil_matvec(diag, east, south, w, p, q):
    n = p.size
    for i in range(n):
        acc = diag[i] * p[i]
        if i + 1 < n:
            acc -= east[i] * p[i + 1]
        if i >= 1:
            acc -= east[i - 1] * p[i - 1]
        if i + w < n:
            acc -= south[i] * p[i + w]
        if i >= w:
            acc -= south[i - w] * p[i - w]
        q[i] = acc


@njit(cache=True)
def _pcg_stencil(diag, east, south, w, b, x, tol, max_iter):
    n = b.size
    inv_diag = 1.0 / diag
    r = np.empty(n)
    z = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    _stencil_matvec(diag, east, south, w, x, q)
    bb = 0.0
    rr = 0.0
    rz = 0.0
    for i in range(n):
        bb += b[i] * b[i]
        r[i] = b[i] - q[i]
        rr += r[i] * r[i]
        z[i] = inv_diag[i] * r[i]
        p[i] = z[i]
        rz += r[i] * z[i]
    bnorm = np.sqrt(bb)
    res = np.sqrt(rr) / bnorm
    if res <= tol:
        return res, 0
    for it in range(1, max_iter + 1):
        _stencil_matvec(diag, east, south, w, p, q)
        pq = 0.0
        for i in range(n):
            pq += p[i] * q[i]
        alpha = rz / pq
        rr = 0.0
        rz_new = 0.0
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * q[i]
            rr += r[i] * r[i]
            z[i] = inv_diag[i] * r[i]
            rz_new += r[i] * z[i]
        res = np.sqrt(rr) / bnorm
        if res <= tol:
            _stencil_matvec(diag, east, south, w, x, q)
            rr = 0.0
            for i in range(n):
                d = b[i] - q[i]
                rr += d * d
            res = np.sqrt(rr) / bnorm
            if res <= tol:
                return res, it
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return res, max_iter + 1


def solve_five_point(system: FivePointSystem, tol: float = 1e-5, max_iter: int = 1000, x0=None) -> np.ndarray:
    """Same Jacobi-PCG as :func:`solve_spd`, on the stencil directly."""
    b = np.ascontiguousarray(system.rhs, dtype=np.float64)
    if not np.any(b):
        return np.zeros_like(b)
    e = _binary_exponent(b)
    b = np.ldexp(b, -e)
    x = b.copy() if x0 is None else np.ldexp(np.asarray(x0, dtype=np.float64), -e)
    res, iters = _pcg_stencil(
        system.diag, system.east, system.south, int(system.width), b, x, float(tol), int(max_iter)
    )
    if iters > max_iter:
        raise SolverError(
            f"conjugate gradient did not reach tol={tol:g} in {max_iter} iterations "
            f"(relative residual {res:.3e})",
            residual=float(res),
            iterations=max_iter,
        )
    return np.ldexp(x, e)


def rtv_smooth(a: np.ndarray, config: SmootherConfig) -> np.ndarray:
    """RTV illumination by IRLS; the window scale halves each round (floor 0.5)."""
    a = np.asarray(a, dtype=np.float64)
    if config.lam == 0.0:
        return a.copy()
    s = a.copy()
    sigma = config.sigma
    for _ in range(config.iterations):
        wx, wy = rtv_weights(s, sigma, config.eps_rtv, config.sharpness)
        system = weighted_laplacian_system(a, wx, wy, config.lam)
        s = solve_five_point(system, config.solver_tol, config.solver_max_iter, x0=s.ravel()).reshape(a.shape)
        sigma = max(sigma / 2.0, 0.5)
    return s


def gaussian_smooth(a: np.ndarray, sigma: float) -> np.ndarray:
    # mirror boundary keeps the blur doubly stochastic, so the mean is preserved
    return gaussian_filter(np.asarray(a, dtype=np.float64), sigma, mode="reflect")


def smooth(a, config: SmootherConfig | None = None) -> np.ndarray:
    """Illumination estimate of lightness ``a``.

    The result is clipped to ``[a.min(), a.max()]``; the exact solutions of
    both smoothers already lie there, the clip only absorbs solver error.
    """
    config = config or SmootherConfig()
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a non-empty 2-D map, got shape {a.shape}")
    if config.kind == "rtv":
        out = rtv_smooth(a, config)
    else:
        out = gaussian_smooth(a, config.sigma)
    return np.clip(out, a.min(), a.max())


def make_smoother(config: SmootherConfig | None = None):
    """Bind ``config`` into a one-argument smoother callable."""
    config = config or SmootherConfig()
    return lambda a: smooth(a, config)
