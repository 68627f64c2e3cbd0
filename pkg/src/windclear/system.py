"""Assembly and solution of the winding least-squares system.

Unknowns are the stacked surfels mu (area-weighted normals, one dim-vector
per point).  The objective is

    f(P, mu) = (1/N) ( ||A1 mu - b||^2 + (eta/2) ||A2 mu||^2
                       + alpha mu^T R mu ),

with A1 the point-to-point kernel matrix (target value b = 1/2 at every
sample), A2 the box-to-point kernel matrix (target 0), and R the diagonal
of A1^T A1 + (eta/2) A2^T A2.  The winding clearness error W(P) is the
minimum of f over mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import BoxSamples, PointCloud, WindingConfig
from .kernel import kernel_block

_CHUNK = 256           # rows of kernel blocks assembled at a time
_RESID_EPS = 1e-30     # guards the relative-residual denominator


class SolveFailure(RuntimeError):
    """Linear solve failed or did not meet the residual tolerance."""

    def __init__(self, message: str, cond: float = float("nan")):
        super().__init__(f"{message} (condition estimate {cond:.3e})")
        self.cond = cond


@dataclass(frozen=True)
class AssembledSystem:
    """Dense matrices of the winding system for a fixed (P, Q, config)."""

    a1: np.ndarray        # (N, d*N)
    a2: np.ndarray        # (M, d*N)
    rdiag: np.ndarray     # (d*N,)
    atilde: np.ndarray    # (d*N, d*N), SPD for alpha > 0 and rdiag > 0
    btilde: np.ndarray    # (d*N,)
    b: np.ndarray         # (N,), all 1/2
    n: int
    dim: int
    alpha: float
    eta: float


@dataclass(frozen=True)
class WceReport:
    """Winding clearness error and its three constituents."""

    total: float
    data_term: float
    box_term: float
    reg_term: float

    def as_dict(self) -> dict:
        return {"total": self.total, "data_term": self.data_term,
                "box_term": self.box_term, "reg_term": self.reg_term}


def _kernel_matrix(X: np.ndarray, P: np.ndarray, w: float) -> np.ndarray:
    """Rows indexed by X, columns by flattened (point, component) of P."""
    nx, n = X.shape[0], P.shape[0]
    d = P.shape[1]
    out = np.empty((nx, n * d))
    for start in range(0, nx, _CHUNK):
        stop = min(start + _CHUNK, nx)
        out[start:stop] = kernel_block(X[start:stop], P, w).reshape(stop - start, n * d)
    return out


def assemble(P: PointCloud, Q: BoxSamples, cfg: WindingConfig) -> AssembledSystem:
    """Build A1, A2, the regularizer diagonal and the reduced normal system."""
    if Q.dim != P.dim:
        raise ValueError("cloud and box samples must share the same dim")
    max_coord = float(np.abs(P.points).max())
    if Q.half_extent <= max_coord:
        raise ValueError(
            f"box half extent {Q.half_extent} must exceed the cloud's "
            f"max |coordinate| {max_coord:.6g}")
    n, d = len(P), P.dim
    a1 = _kernel_matrix(P.points, P.points, cfg.width)
    a2 = _kernel_matrix(Q.samples, P.points, cfg.width)
    if not np.all(np.isfinite(a1)):
        j, m = np.argwhere(~np.isfinite(a1))[0]
        raise ValueError(f"non-finite kernel entry at A1[{j}, {m}]")
    if not np.all(np.isfinite(a2)):
        j, m = np.argwhere(~np.isfinite(a2))[0]
        raise ValueError(f"non-finite kernel entry at A2[{j}, {m}]")
    half_eta = 0.5 * cfg.eta
    rdiag = np.einsum("jm,jm->m", a1, a1) + half_eta * np.einsum("jm,jm->m", a2, a2)
    atilde = a1.T @ a1
    if cfg.eta != 0.0:
        atilde += half_eta * (a2.T @ a2)
    atilde[np.diag_indices_from(atilde)] += cfg.alpha * rdiag
    b = np.full(n, 0.5)
    btilde = 0.5 * a1.sum(axis=0)
    return AssembledSystem(a1=a1, a2=a2, rdiag=rdiag, atilde=atilde,
                           btilde=btilde, b=b, n=n, dim=d,
                           alpha=cfg.alpha, eta=cfg.eta)


def solve_surfels(sys: AssembledSystem, require_spd: bool = False) -> np.ndarray:
    """Solve Atilde mu = btilde; Cholesky first, LU fallback.

    Raises SolveFailure when factorization fails or the relative residual
    exceeds 1e-8.  With require_spd=True the LU fallback is disabled
    (callers that rely on mu being the unique minimizer, e.g. gradients).
    """
    try:
        c, low = scipy.linalg.cho_factor(sys.atilde, check_finite=False)
        mu = scipy.linalg.cho_solve((c, low), sys.btilde, check_finite=False)
    except scipy.linalg.LinAlgError:
        if require_spd:
            raise SolveFailure("matrix is not positive definite",
                               cond=float(np.linalg.cond(sys.atilde)))
        lu, piv = scipy.linalg.lu_factor(sys.atilde, check_finite=False)
        mu = scipy.linalg.lu_solve((lu, piv), sys.btilde, check_finite=False)
    resid = np.linalg.norm(sys.atilde @ mu - sys.btilde)
    rel = resid / max(np.linalg.norm(sys.btilde), _RESID_EPS)
    if not np.isfinite(rel) or rel > 1e-8:
        raise SolveFailure(f"relative residual {rel:.3e} exceeds 1e-8",
                           cond=float(np.linalg.cond(sys.atilde)))
    return mu


def evaluate_objective(sys: AssembledSystem, mu: np.ndarray) -> WceReport:
    """Evaluate f(P, mu) term by term at a given surfel vector."""
    n = sys.n
    r1 = sys.a1 @ mu - sys.b
    data = float(r1 @ r1) / n
    if sys.eta != 0.0:
        r2 = sys.a2 @ mu
        box = 0.5 * sys.eta * float(r2 @ r2) / n
    else:
        box = 0.0
    reg = sys.alpha * float((sys.rdiag * mu) @ mu) / n
    return WceReport(total=data + box + reg, data_term=data,
                     box_term=box, reg_term=reg)


def wce_from_system(sys: AssembledSystem, mu: np.ndarray) -> WceReport:
    """WCE report at solved surfels, cross-checked against the closed form.

    The explicit objective value and the closed form (1/N)(b.b - b.A1 mu)
    must agree to 1e-8 relative; disagreement signals a numerical failure
    and raises SolveFailure.
    """
    report = evaluate_objective(sys, mu)
    closed = (float(sys.b @ sys.b) - float(sys.b @ (sys.a1 @ mu))) / sys.n
    denom = max(abs(closed), abs(report.total), _RESID_EPS)
    if abs(report.total - closed) / denom > 1e-8:
        raise SolveFailure(
            f"objective {report.total:.6e} and closed form {closed:.6e} disagree",
            cond=float(np.linalg.cond(sys.atilde)))
    return report


def winding_clearness(P: PointCloud, Q: BoxSamples,
                      cfg: WindingConfig) -> tuple[WceReport, np.ndarray]:
    """Winding clearness error W(P) with constituents, plus the surfels."""
    sys = assemble(P, Q, cfg)
    mu = solve_surfels(sys)
    return wce_from_system(sys, mu), mu


def winding_field(P: PointCloud, mu: np.ndarray, queries: np.ndarray,
                  cfg: WindingConfig) -> np.ndarray:
    """Evaluate chi(x) = sum_i K~(x, p_i) . mu_i at each query point."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != P.dim:
        raise ValueError("query dim mismatch")
    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], _CHUNK):
        stop = min(start + _CHUNK, queries.shape[0])
        block = _kernel_matrix(queries[start:stop], P.points, cfg.width)
        out[start:stop] = block @ mu
    return out


def field_grid(P: PointCloud, mu: np.ndarray, resolution: int, extent: float,
               cfg: WindingConfig) -> np.ndarray:
    """chi on a regular grid over [-extent, extent]^dim, shape (res,)*dim.

    Axis order matches meshgrid 'ij' indexing: out[i, j(, k)] is the value
    at coordinate (x_i, y_j(, z_k)).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axes = [np.linspace(-extent, extent, resolution)] * P.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    chi = winding_field(P, mu, pts, cfg)
    return chi.reshape((resolution,) * P.dim)
