"""Winding-number kernel with clamped near field, plus analytic Jacobians.

The kernel is the gradient of the fundamental solution of the Laplace
equation (3D: -(x-y)/(4 pi r^3), 2D: -(x-y)/(2 pi r^2)), with the r < w
near field replaced by the linear clamp -(x-y)/(c w^d).  The clamped
kernel is finite everywhere and C0 at r = w.
"""

from __future__ import annotations

import numpy as np

_COEF = {2: 1.0 / (2.0 * np.pi), 3: 1.0 / (4.0 * np.pi)}


def kernel_mod(x, y, w: float) -> np.ndarray:
    """Clamped kernel value K~(x, y), a length-dim vector."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x.shape[-1]
    u = x - y
    r = float(np.linalg.norm(u))
    denom = r ** d if r >= w else w ** d
    return -_COEF[d] * u / denom


def kernel_mod_jacobian(x, y, w: float, wrt: str = "second") -> np.ndarray:
    """Analytic dim x dim Jacobian of kernel_mod w.r.t. one argument.

    At r == w exactly the far branch is used (deterministic tie-break);
    the kernel is only C0 there.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x.shape[-1]
    c = _COEF[d]
    u = x - y
    r = float(np.linalg.norm(u))
    if r >= w:
        jy = c * (np.eye(d) / r ** d - d * np.outer(u, u) / r ** (d + 2))
    else:
        jy = c / w ** d * np.eye(d)
    if wrt == "second":
        return jy
    if wrt == "first":
        return -jy
    raise ValueError("wrt must be 'first' or 'second'")


def kernel_block(X: np.ndarray, Y: np.ndarray, w: float) -> np.ndarray:
    """Pairwise kernel values K~(X[j], Y[i]) as an (nx, ny, dim) array.

    Coincident pairs evaluate to the zero vector (clamped branch, zero
    numerator), so no masking of the diagonal is needed.
    """
    d = X.shape[1]
    u = X[:, None, :] - Y[None, :, :]
    r = np.linalg.norm(u, axis=2)
    denom = np.where(r >= w, np.maximum(r, w) ** d, w ** d)
    return -_COEF[d] * u / denom[:, :, None]


def jacobian_contract(u: np.ndarray, r: np.ndarray, G: np.ndarray,
                      w: float) -> np.ndarray:
    """J_y^T G per pair, given precomputed differences u = x - y and r = |u|.

    u, G: (nx, ny, dim); r: (nx, ny).  The Jacobian of the clamped kernel
    w.r.t. its second argument is symmetric on both branches, so the
    transpose is free; the far branch is used at r == w.
    """
    d = u.shape[2]
    c = _COEF[d]
    rsafe = np.maximum(r, w)
    udotg = np.einsum("jik,jik->ji", u, G)
    out = c * (G / rsafe[:, :, None] ** d
               - d * u * (udotg / rsafe ** (d + 2))[:, :, None])
    np.copyto(out, (c / w ** d) * G, where=(r < w)[:, :, None])
    return out


def apply_jacobian_second(X: np.ndarray, Y: np.ndarray, G: np.ndarray,
                          w: float) -> np.ndarray:
    """Contract J_y(X[j], Y[i])^T with G[j, i] per pair; (nx, ny, dim) out."""
    u = X[:, None, :] - Y[None, :, :]
    r = np.linalg.norm(u, axis=2)
    return jacobian_contract(u, r, G, w)
