"""Core domain types: point clouds, box samples, configs, seeded RNG streams."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class DegenerateCloudError(ValueError):
    """Raised when a cloud has zero extent and cannot be normalized."""


def _as_points(points, dim=None) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be an (N, dim) array")
    if pts.shape[1] not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {pts.shape[1]}")
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"expected dim {dim}, got {pts.shape[1]}")
    if pts.shape[0] < 1:
        raise ValueError("cloud must contain at least one point")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")
    return pts


@dataclass(frozen=True)
class PointCloud:
    """Ordered set of 2D or 3D points; index i is stable across operations."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _as_points(self.points))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_points(self, points) -> "PointCloud":
        return PointCloud(_as_points(points, dim=self.dim))


@dataclass(frozen=True)
class BoxSamples:
    """Fixed samples on the boundary of the cube [-h, h]^dim."""

    samples: np.ndarray
    half_extent: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_points(self.samples))
        h = float(self.half_extent)
        on_face = np.isclose(np.abs(self.samples).max(axis=1), h, atol=1e-12)
        if not on_face.all():
            raise ValueError("box samples must lie on the cube boundary")

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class WindingConfig:
    """Parameters of the winding-field least-squares system.

    width:  kernel clamp radius w (> 0)
    alpha:  Tikhonov weight on the diagonal regularizer
    eta:    weight of the zero-field constraint on the enclosing box
    box_half_extent: half side length h of the constraint cube
    box_sample_count: number of box samples M; None means 2N
    """

    width: float = 0.04
    alpha: float = 0.5
    eta: float = 50.0
    box_half_extent: float = 0.7
    box_sample_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.alpha < 0 or self.eta < 0:
            raise ValueError("alpha and eta must be nonnegative")
        if self.box_half_extent <= 0:
            raise ValueError("box_half_extent must be positive")


@dataclass
class RngStream:
    """Deterministic RNG stream keyed by (seed, counter).

    Uses numpy's PCG64 seeded through SeedSequence(seed, spawn_key=(counter,)),
    so the same (seed, counter) reproduces the same samples on any platform.
    Parallel consumers should take disjoint counters via child().
    """

    seed: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.counter,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self) -> "RngStream":
        self.counter += 1
        return RngStream(self.seed, self.counter)


@dataclass(frozen=True)
class Transform:
    """Similarity transform x -> (x - translation) * scale."""

    scale: float
    translation: np.ndarray

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) * self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) / self.scale + self.translation


def normalize_cloud(cloud: PointCloud) -> tuple[PointCloud, Transform]:
    """Center the bounding box at the origin and scale its longest axis to 1."""
    if len(cloud) < 2:
        raise DegenerateCloudError("zero extent: need at least two distinct points")
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    extent = float((hi - lo).max())
    if extent == 0.0:
        raise DegenerateCloudError("zero extent: all points identical")
    tf = Transform(scale=1.0 / extent, translation=(lo + hi) / 2.0)
    return cloud.with_points(tf.apply(cloud.points)), tf


def add_gaussian_noise(cloud: PointCloud, sigma: float, rng: RngStream) -> PointCloud:
    """Perturb every coordinate independently by N(0, sigma^2)."""
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be finite and nonnegative")
    if sigma == 0.0:
        return cloud
    noise = rng.generator().normal(0.0, sigma, size=cloud.points.shape)
    return cloud.with_points(cloud.points + noise)


def sample_bounding_box(dim: int, half_extent: float, count: int,
                        rng: RngStream) -> BoxSamples:
    """Sample `count` points uniformly on the boundary of [-h, h]^dim.

    Each of the 2*dim faces is chosen with equal probability (cube faces have
    equal area), then the point is uniform on that face.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if count < 2 * dim:
        raise ValueError(f"count must be at least {2 * dim} to cover all faces")
    if half_extent <= 0:
        raise ValueError("half_extent must be positive")
    gen = rng.generator()
    h = float(half_extent)
    face = gen.integers(0, 2 * dim, size=count)
    pts = gen.uniform(-h, h, size=(count, dim))
    axis = face // 2
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    pts[np.arange(count), axis] = sign * h
    return BoxSamples(samples=pts, half_extent=h)


def sample_circle(n: int, radius: float) -> PointCloud:
    """n points uniformly spaced by arc length on an origin-centered circle."""
    if n < 3:
        raise ValueError("need at least 3 points")
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return PointCloud(pts)


def sample_rectangle(n: int, major: float, minor: float) -> PointCloud:
    """n points uniformly spaced by perimeter on an origin-centered rectangle.

    The rectangle spans [-major/2, major/2] x [-minor/2, minor/2].
    """
    if n < 3:
        raise ValueError("need at least 3 points")
    a, b = major / 2.0, minor / 2.0
    perim = 4.0 * (a + b)
    # arc-length positions, walking counterclockwise from (-a, -b)
    s = perim * np.arange(n) / n
    pts = np.empty((n, 2))
    for i, si in enumerate(s):
        if si < 2 * a:                       # bottom edge
            pts[i] = (-a + si, -b)
        elif si < 2 * a + 2 * b:             # right edge
            pts[i] = (a, -b + (si - 2 * a))
        elif si < 4 * a + 2 * b:             # top edge
            pts[i] = (a - (si - 2 * a - 2 * b), b)
        else:                                # left edge
            pts[i] = (-a, b - (si - 4 * a - 2 * b))
    return PointCloud(pts)


def sample_sphere(n: int, radius: float) -> PointCloud:
    """n points on an origin-centered sphere via the Fibonacci spiral."""
    if n < 4:
        raise ValueError("need at least 4 points")
    i = np.arange(n) + 0.5
    phi = np.arccos(1.0 - 2.0 * i / n)
    golden = np.pi * (1.0 + np.sqrt(5.0))
    theta = golden * i
    pts = radius * np.stack([np.sin(phi) * np.cos(theta),
                             np.sin(phi) * np.sin(theta),
                             np.cos(phi)], axis=1)
    return PointCloud(pts)
