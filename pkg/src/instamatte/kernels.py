"""Hot numeric kernels with paired numba and pure-numpy implementations.

The two kernels that dominate runtime are the per-window color statistics
behind the matting affinity matrix and the conjugate-gradient solve. Both
carry an ``@njit`` implementation and a vectorized numpy fallback. The
active path is chosen once at import time from the ``INSTAMATTE_NUMBA``
environment variable:

* ``auto`` (default): numba when importable, numpy otherwise
* ``1`` / ``on``:     require numba, raise if it cannot be imported
* ``0`` / ``off``:    force the numpy fallback

Both paths implement identical formulas; results agree to floating-point
noise (see tests). ``benchmarks/bench_kernels.py`` times one against the
other. Kernels are single-threaded without fastmath so a given path is
bit-deterministic for fixed inputs.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_FLAG = os.environ.get("INSTAMATTE_NUMBA", "auto").strip().lower()
if _FLAG in {"0", "off", "false", "no"}:
    NUMBA_ENABLED = False
elif _FLAG in {"1", "on", "true", "yes", "auto", ""}:
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:
        if _FLAG not in {"auto", ""}:
            raise RuntimeError("INSTAMATTE_NUMBA requests numba but it is not installed")
        NUMBA_ENABLED = False
else:
    raise ValueError(f"unrecognized INSTAMATTE_NUMBA value {_FLAG!r}")


def window_indices(height: int, width: int, win_rad: int) -> np.ndarray:
    """Flat pixel indices of every full (2r+1)x(2r+1) window, one row per window."""
    diam = 2 * win_rad + 1
    idx = np.arange(height * width, dtype=np.int64).reshape(height, width)
    win = sliding_window_view(idx, (diam, diam)).reshape(-1, diam * diam)
    return np.ascontiguousarray(win)


# ---------------------------------------------------------------------------
# Matting affinity window statistics
#
# For window t with pixels I_a (rows of flat_img selected by win_inds[t]):
#   mu    = mean of the window colors,  X_a = I_a - mu
#   Sigma = X^T X / ws + (eps / ws) Id
#   vals[t, a, b] = delta_ab - (1 + X_a^T Sigma^-1 X_b) / ws
#
# The quadratic form goes through a 3x3 Cholesky of Sigma and is assembled
# as Z Z^T, which keeps each window block symmetric PSD even when the color
# covariance is rank-deficient (flat or grayscale windows) and only the eps
# ridge carries the small eigenvalues; a cofactor inverse loses several
# digits there.
# ---------------------------------------------------------------------------

_CHUNK = 32768  # windows per numpy block, bounds peak memory


def laplacian_values_numpy(flat_img: np.ndarray, win_inds: np.ndarray, eps: float) -> np.ndarray:
    n_win, ws = win_inds.shape
    vals = np.empty((n_win, ws, ws), dtype=np.float64)
    eye = np.eye(ws)
    for start in range(0, n_win, _CHUNK):
        inds = win_inds[start : start + _CHUNK]
        win = flat_img[inds]  # (m, ws, 3)
        mu = win.mean(axis=1, keepdims=True)
        centered = win - mu
        cov = np.einsum("...ji,...jk->...ik", centered, centered) / ws + (eps / ws) * np.eye(3)
        chol = np.linalg.cholesky(cov)
        # forward-substitute chol @ z = x for every window pixel at once
        l00 = chol[..., 0:1, 0]
        l10 = chol[..., 1:2, 0]
        l11 = chol[..., 1:2, 1]
        l20 = chol[..., 2:3, 0]
        l21 = chol[..., 2:3, 1]
        l22 = chol[..., 2:3, 2]
        z0 = centered[..., 0] / l00
        z1 = (centered[..., 1] - l10 * z0) / l11
        z2 = (centered[..., 2] - l20 * z0 - l21 * z1) / l22
        z = np.stack([z0, z1, z2], axis=-1)  # (m, ws, 3)
        quad = np.einsum("...ik,...jk->...ij", z, z)
        vals[start : start + _CHUNK] = eye - (1.0 + quad) / ws
    return vals


if NUMBA_ENABLED:

    @numba.njit(cache=True)
    def _laplacian_values_jit(flat_img, win_inds, eps):
        n_win, ws = win_inds.shape
        vals = np.empty((n_win, ws, ws), dtype=np.float64)
        centered = np.empty((ws, 3), dtype=np.float64)
        z = np.empty((ws, 3), dtype=np.float64)
        for t in range(n_win):
            mu0 = mu1 = mu2 = 0.0
            for a in range(ws):
                p = win_inds[t, a]
                mu0 += flat_img[p, 0]
                mu1 += flat_img[p, 1]
                mu2 += flat_img[p, 2]
            mu0 /= ws
            mu1 /= ws
            mu2 /= ws
            for a in range(ws):
                p = win_inds[t, a]
                centered[a, 0] = flat_img[p, 0] - mu0
                centered[a, 1] = flat_img[p, 1] - mu1
                centered[a, 2] = flat_img[p, 2] - mu2
            # covariance of the centered colors plus the eps/ws ridge
            c00 = c01 = c02 = c11 = c12 = c22 = 0.0
            for a in range(ws):
                c00 += centered[a, 0] * centered[a, 0]
                c01 += centered[a, 0] * centered[a, 1]
                c02 += centered[a, 0] * centered[a, 2]
                c11 += centered[a, 1] * centered[a, 1]
                c12 += centered[a, 1] * centered[a, 2]
                c22 += centered[a, 2] * centered[a, 2]
            ridge = eps / ws
            c00 = c00 / ws + ridge
            c01 /= ws
            c02 /= ws
            c11 = c11 / ws + ridge
            c12 /= ws
            c22 = c22 / ws + ridge
            # 3x3 Cholesky
            l00 = np.sqrt(c00)
            l10 = c01 / l00
            l20 = c02 / l00
            l11 = np.sqrt(c11 - l10 * l10)
            l21 = (c12 - l20 * l10) / l11
            l22 = np.sqrt(c22 - l20 * l20 - l21 * l21)
            for a in range(ws):
                z0 = centered[a, 0] / l00
                z1 = (centered[a, 1] - l10 * z0) / l11
                z2 = (centered[a, 2] - l20 * z0 - l21 * z1) / l22
                z[a, 0] = z0
                z[a, 1] = z1
                z[a, 2] = z2
            for a in range(ws):
                for b in range(ws):
                    q = z[a, 0] * z[b, 0] + z[a, 1] * z[b, 1] + z[a, 2] * z[b, 2]
                    val = -(1.0 + q) / ws
                    if a == b:
                        val += 1.0
                    vals[t, a, b] = val
        return vals

    def laplacian_values_numba(flat_img, win_inds, eps):
        return _laplacian_values_jit(
            np.ascontiguousarray(flat_img, dtype=np.float64),
            np.ascontiguousarray(win_inds, dtype=np.int64),
            float(eps),
        )

else:

    def laplacian_values_numba(flat_img, win_inds, eps):
        raise RuntimeError("numba path unavailable (INSTAMATTE_NUMBA=off or numba missing)")


def laplacian_values(flat_img, win_inds, eps):
    if NUMBA_ENABLED:
        return laplacian_values_numba(flat_img, win_inds, eps)
    return laplacian_values_numpy(flat_img, win_inds, eps)


# ---------------------------------------------------------------------------
# Conjugate gradient on a CSR matrix
#
# Plain CG for symmetric positive definite systems. The tolerance is an
# absolute bound on the 2-norm of the residual: matting systems carry
# near-null modes at the epsilon scale (any locally color-affine field),
# and a tolerance relative to ||b|| would declare victory long before
# those modes are resolved. The quadratic energy 0.5 x'Ax - b'x is
# available per iteration as -0.5 x'(b + r), which reuses the running
# residual instead of an extra matvec.
# ---------------------------------------------------------------------------


def cg_numpy(matrix, b, x0, tol, maxiter, collect_energy=False):
    x = np.array(x0, dtype=np.float64)
    r = b - matrix @ x
    d = r.copy()
    rs = float(r @ r)
    energies = [-0.5 * float(x @ (b + r))] if collect_energy else None
    iterations = 0
    while iterations < maxiter and np.sqrt(rs) > tol:
        ad = matrix @ d
        dad = float(d @ ad)
        if dad <= 0.0:
            break
        step = rs / dad
        x += step * d
        r -= step * ad
        rs_new = float(r @ r)
        d = r + (rs_new / rs) * d
        rs = rs_new
        iterations += 1
        if collect_energy:
            energies.append(-0.5 * float(x @ (b + r)))
    energy_arr = np.array(energies) if collect_energy else None
    return x, iterations, float(np.sqrt(rs)), energy_arr


if NUMBA_ENABLED:

    @numba.njit(cache=True)
    def _csr_matvec(data, indices, indptr, v, out):
        for i in range(out.size):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += data[k] * v[indices[k]]
            out[i] = acc

    @numba.njit(cache=True)
    def _cg_jit(data, indices, indptr, b, x0, tol, maxiter, energies):
        n = b.size
        x = x0.copy()
        av = np.empty(n, dtype=np.float64)
        _csr_matvec(data, indices, indptr, x, av)
        r = b - av
        d = r.copy()
        rs = np.dot(r, r)
        track = energies.size > 0
        if track:
            energies[0] = -0.5 * np.dot(x, b + r)
        iterations = 0
        while iterations < maxiter and np.sqrt(rs) > tol:
            _csr_matvec(data, indices, indptr, d, av)
            dad = np.dot(d, av)
            if dad <= 0.0:
                break
            step = rs / dad
            x = x + step * d
            r = r - step * av
            rs_new = np.dot(r, r)
            d = r + (rs_new / rs) * d
            rs = rs_new
            iterations += 1
            if track:
                energies[iterations] = -0.5 * np.dot(x, b + r)
        return x, iterations, np.sqrt(rs)

    def cg_numba(matrix, b, x0, tol, maxiter, collect_energy=False):
        energies = np.empty(maxiter + 1 if collect_energy else 0, dtype=np.float64)
        x, iterations, resid = _cg_jit(
            matrix.data,
            matrix.indices,
            matrix.indptr,
            np.ascontiguousarray(b, dtype=np.float64),
            np.ascontiguousarray(x0, dtype=np.float64),
            float(tol),
            int(maxiter),
            energies,
        )
        energy_arr = energies[: iterations + 1].copy() if collect_energy else None
        return x, int(iterations), float(resid), energy_arr

else:

    def cg_numba(matrix, b, x0, tol, maxiter, collect_energy=False):
        raise RuntimeError("numba path unavailable (INSTAMATTE_NUMBA=off or numba missing)")


def cg_solve(matrix, b, x0, tol, maxiter, collect_energy=False):
    """Solve ``matrix @ x = b`` by CG from ``x0``.

    ``tol`` bounds the absolute residual 2-norm. Returns
    ``(x, iterations, residual, energies)``.
    """
    if NUMBA_ENABLED:
        return cg_numba(matrix, b, x0, tol, maxiter, collect_energy)
    return cg_numpy(matrix, b, x0, tol, maxiter, collect_energy)
