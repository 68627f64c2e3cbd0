"""Analytic gradient of the winding clearness error w.r.t. point coordinates.

Because the surfels mu(P) minimize the quadratic objective f(P, .), the
stationarity condition grad_mu f = 0 makes the total derivative of
W(P) = f(P, mu(P)) equal to the partial derivative of f in P with mu held
fixed (envelope argument).  No differentiation through the linear solve is
needed; the finite-difference oracle below, which does re-solve, validates
this.
"""

from __future__ import annotations

import warnings

import numpy as np

from .core import BoxSamples, PointCloud, WindingConfig
from .kernel import jacobian_contract
from .system import (WceReport, assemble, solve_surfels, wce_from_system,
                     winding_clearness)

_CHUNK = 256
_BRANCH_BAND = 1e-6   # |r - w| below this: subgradient, flag a warning


def _accumulate(X: np.ndarray, P: np.ndarray, G: np.ndarray, w: float,
                grad: np.ndarray, rows_are_points: bool) -> float:
    """Chain rule through one kernel matrix block, chunked over rows.

    G holds df/dA for the block whose entries are K~(X[j], P[i]).  Every
    pair contributes J_y^T g to the gradient of P[i]; when the rows X are
    themselves cloud points, each pair also contributes -J_y^T g to the
    gradient of X[j] (the Jacobian in the first argument is the negative
    of the one in the second).  Returns the minimum |r - w| seen.
    """
    n, d = P.shape
    min_gap = np.inf
    for start in range(0, X.shape[0], _CHUNK):
        stop = min(start + _CHUNK, X.shape[0])
        u = X[start:stop, None, :] - P[None, :, :]
        r = np.linalg.norm(u, axis=2)
        gap = np.abs(r - w)
        if rows_are_points:
            # coincident diagonal pairs sit at r = 0, not near the branch
            min_gap = min(min_gap, gap[r > 0].min(initial=np.inf))
        else:
            min_gap = min(min_gap, gap.min(initial=np.inf))
        t = jacobian_contract(u, r, G[start:stop].reshape(stop - start, n, d), w)
        grad += t.sum(axis=0)
        if rows_are_points:
            grad[start:stop] -= t.sum(axis=1)
    return min_gap


def grad_wce(P: PointCloud, Q: BoxSamples,
             cfg: WindingConfig) -> tuple[np.ndarray, WceReport]:
    """d W / d P as an (N, dim) array, plus the WCE report at P.

    Requires the reduced matrix to be positive definite (so the surfels
    are the unique minimizer and the envelope argument is exact).  If any
    point pair sits within 1e-6 of the kernel branch radius the returned
    value is a chosen subgradient and a RuntimeWarning is issued.
    """
    sys = assemble(P, Q, cfg)
    mu = solve_surfels(sys, require_spd=True)
    report = wce_from_system(sys, mu)
    n = sys.n
    r1 = sys.a1 @ mu - sys.b
    musq = mu * mu
    # df/dA1 and df/dA2, including the diagonal-regularizer dependence
    g1 = (2.0 / n) * (np.outer(r1, mu) + cfg.alpha * sys.a1 * musq[None, :])
    grad = np.zeros_like(P.points)
    gap1 = _accumulate(P.points, P.points, g1, cfg.width, grad,
                       rows_are_points=True)
    del g1
    gap2 = np.inf
    if cfg.eta != 0.0:
        r2 = sys.a2 @ mu
        g2 = (cfg.eta / n) * (np.outer(r2, mu) + cfg.alpha * sys.a2 * musq[None, :])
        gap2 = _accumulate(Q.samples, P.points, g2, cfg.width, grad,
                           rows_are_points=False)
    if min(gap1, gap2) <= _BRANCH_BAND:
        warnings.warn(
            "point pair within 1e-6 of the kernel branch radius; "
            "gradient is a subgradient", RuntimeWarning, stacklevel=2)
    return grad, report


def grad_loss(P: PointCloud, P0: PointCloud, Q: BoxSamples,
              cfg: WindingConfig, lam: float) -> tuple[np.ndarray, float, WceReport]:
    """Gradient and value of Loss(P) = W(P) + (lam/N) ||P - P0||^2."""
    if len(P) != len(P0) or P.dim != P0.dim:
        raise ValueError("P and P0 must have the same shape")
    grad, report = grad_wce(P, Q, cfg)
    n = len(P)
    diff = P.points - P0.points
    loss = report.total + lam / n * float(np.sum(diff * diff))
    grad = grad + (2.0 * lam / n) * diff
    return grad, loss, report


def fd_gradient(P: PointCloud, Q: BoxSamples, cfg: WindingConfig,
                step: float = 1e-5) -> np.ndarray:
    """Central finite differences of W(P), re-solving per coordinate.

    O(N * dim) full solves; intended as a validation oracle for small N.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    base = P.points
    grad = np.empty_like(base)
    for i in range(base.shape[0]):
        for k in range(base.shape[1]):
            for sign, slot in ((1.0, 0), (-1.0, 1)):
                pts = base.copy()
                pts[i, k] += sign * step
                rep, _ = winding_clearness(P.with_points(pts), Q, cfg)
                if slot == 0:
                    plus = rep.total
                else:
                    minus = rep.total
            grad[i, k] = (plus - minus) / (2.0 * step)
    return grad
