"""Point-level quality metrics: Chamfer distance, normal consistency,
F-score, and mean absolute distance to a dense reference.

Normal consistency for denoised clouds uses normals obtained by
normalizing the solved surfels; this is a point-level stand-in for the
mesh-based protocol and is labeled as such in reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_FSCORE_TAU = 7.5e-3

# above this size, nearest neighbors go through a kd-tree instead of the
# exhaustive pairwise distance matrix
_EXHAUSTIVE_LIMIT = 5000


@dataclass(frozen=True)
class MetricsReport:
    cd: float
    nc: float | None
    fscore: float
    mads: float
    wce: float | None = None

    def as_dict(self) -> dict:
        return {"cd": self.cd, "nc": self.nc, "fscore": self.fscore,
                "mads": self.mads, "wce": self.wce,
                "nc_source": "point-level (surfel normals)"}


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("metrics require nonempty clouds")
    if a.shape[1] != b.shape[1]:
        raise ValueError("clouds must have the same dim")
    return a, b


def nearest_distances(query: np.ndarray, ref: np.ndarray,
                      return_index: bool = False):
    """Distance from each query point to its nearest reference point."""
    query, ref = _check_pair(query, ref)
    if max(query.shape[0], ref.shape[0]) > _EXHAUSTIVE_LIMIT:
        dist, idx = cKDTree(ref).query(query)
    else:
        d2 = ((query[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2)
        idx = d2.argmin(axis=1)
        dist = np.sqrt(d2[np.arange(query.shape[0]), idx])
    return (dist, idx) if return_index else dist


def chamfer(p: np.ndarray, pref: np.ndarray) -> float:
    """Two-way Chamfer distance: sum of both directed mean NN distances."""
    return float(nearest_distances(p, pref).mean()
                 + nearest_distances(pref, p).mean())


def mads(p: np.ndarray, pref_dense: np.ndarray) -> float:
    """One-directional mean nearest-neighbor distance from p to the reference."""
    return float(nearest_distances(p, pref_dense).mean())


def f_score(p: np.ndarray, pref: np.ndarray,
            tau: float = DEFAULT_FSCORE_TAU) -> float:
    """Harmonic mean of precision and recall at distance threshold tau."""
    precision = float((nearest_distances(p, pref) < tau).mean())
    recall = float((nearest_distances(pref, p) < tau).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def normal_consistency(p: np.ndarray, pn: np.ndarray,
                       pref: np.ndarray, prefn: np.ndarray) -> float:
    """Symmetric mean |n . n_nearest| between two clouds with unit normals."""
    p, pref = _check_pair(p, pref)
    pn = np.asarray(pn, dtype=np.float64)
    prefn = np.asarray(prefn, dtype=np.float64)
    for name, normals in (("first", pn), ("second", prefn)):
        norms = np.linalg.norm(normals, axis=1)
        bad = np.nonzero(norms < 1e-12)[0]
        if bad.size:
            raise ValueError(
                f"zero-length normals in {name} cloud at indices {bad.tolist()}")

    def directed(a, an, b, bn):
        _, idx = nearest_distances(a, b, return_index=True)
        dots = np.einsum("ik,ik->i", an, bn[idx])
        return float(np.abs(dots).mean())

    return 0.5 * (directed(p, pn, pref, prefn) + directed(pref, prefn, p, pn))


def normals_from_surfels(mu: np.ndarray, dim: int) -> np.ndarray:
    """Unit normals from the solved surfel vector (N*dim,) -> (N, dim)."""
    vecs = np.asarray(mu, dtype=np.float64).reshape(-1, dim)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / np.maximum(norms, 1e-300)
