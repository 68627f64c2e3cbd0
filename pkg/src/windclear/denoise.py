"""Adam-driven denoising of point coordinates, with a multi-batch mode for
clouds too large for one dense solve.

The loss is Loss(P) = W(P) + (lam/N) ||P - P0||^2: the winding clearness
error plus a quadratic pin to the input positions.  Box samples Q are
drawn once per run and stay fixed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import BoxSamples, PointCloud, RngStream, WindingConfig, sample_bounding_box
from .gradient import grad_loss
from .system import SolveFailure, WceReport


@dataclass(frozen=True)
class AdamParams:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass(frozen=True)
class BatchParams:
    batch_size: int = 5000
    mix_size: int = 2500
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2 * self.mix_size:
            raise ValueError("batch_size must be at least 2 * mix_size")


@dataclass(frozen=True)
class DenoiseConfig:
    lam: float = 20.0
    iters: int = 100
    adam: AdamParams = field(default_factory=AdamParams)
    winding: WindingConfig = field(default_factory=lambda: WindingConfig(
        eta=10.0, box_half_extent=0.6))
    batch: BatchParams = field(default_factory=BatchParams)

    def __post_init__(self):
        if self.iters < 0:
            raise ValueError("iters must be nonnegative")


@dataclass
class DenoiseTrace:
    """Per-iteration loss history, including the initial evaluation."""

    loss: list[float] = field(default_factory=list)
    wce: list[float] = field(default_factory=list)
    reports: list[WceReport] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    aborted: bool = False

    def extend(self, other: "DenoiseTrace") -> None:
        self.loss += other.loss
        self.wce += other.wce
        self.reports += other.reports
        self.seconds += other.seconds
        self.aborted = self.aborted or other.aborted


def _sample_box(dim: int, n_points: int, cfg: DenoiseConfig) -> BoxSamples:
    w = cfg.winding
    m = w.box_sample_count if w.box_sample_count is not None else 2 * n_points
    return sample_bounding_box(dim, w.box_half_extent, m, RngStream(w.seed))


def _adam_loop(points: np.ndarray, anchor: np.ndarray, mask: np.ndarray,
               Q: BoxSamples, cfg: DenoiseConfig) -> tuple[np.ndarray, DenoiseTrace]:
    """Run cfg.iters Adam steps on the masked rows of `points`.

    Rows where mask is False are frozen: they contribute to the system but
    never move.  Returns the updated points and the loss trace (length
    iters + 1 unless a solve fails mid-run, which truncates and flags it).
    """
    pts = points.copy()
    p0 = PointCloud(anchor)
    trace = DenoiseTrace()
    a = cfg.adam
    m = np.zeros_like(pts)
    v = np.zeros_like(pts)
    for it in range(cfg.iters + 1):
        start = time.perf_counter()
        try:
            g, loss, report = grad_loss(PointCloud(pts), p0, Q,
                                        cfg.winding, cfg.lam)
        except SolveFailure:
            trace.aborted = True
            break
        trace.loss.append(loss)
        trace.wce.append(report.total)
        trace.reports.append(report)
        if it == cfg.iters:
            trace.seconds.append(time.perf_counter() - start)
            break
        g[~mask] = 0.0
        m = a.beta1 * m + (1.0 - a.beta1) * g
        v = a.beta2 * v + (1.0 - a.beta2) * g * g
        mhat = m / (1.0 - a.beta1 ** (it + 1))
        vhat = v / (1.0 - a.beta2 ** (it + 1))
        step = a.lr * mhat / (np.sqrt(vhat) + a.eps)
        pts[mask] -= step[mask]
        trace.seconds.append(time.perf_counter() - start)
    return pts, trace


def denoise(P0: PointCloud, cfg: DenoiseConfig) -> tuple[PointCloud, DenoiseTrace]:
    """Minimize W(P) + (lam/N)||P - P0||^2 over all point coordinates."""
    Q = _sample_box(P0.dim, len(P0), cfg)
    mask = np.ones(len(P0), dtype=bool)
    pts, trace = _adam_loop(P0.points, P0.points, mask, Q, cfg)
    return P0.with_points(pts), trace


def denoise_batched(P0: PointCloud,
                    cfg: DenoiseConfig) -> tuple[PointCloud, DenoiseTrace]:
    """Denoise a large cloud in batches; every point is updated exactly once.

    The first batch optimizes batch_size random points.  Each later batch
    mixes mix_size not-yet-denoised points with mix_size already-denoised
    anchors; only the former receive gradient updates.  For N <= batch_size
    this reduces to a single plain `denoise` run (bit-identical output).
    """
    n = len(P0)
    if n <= cfg.batch.batch_size:
        return denoise(P0, cfg)
    Q = _sample_box(P0.dim, cfg.batch.batch_size, cfg)
    gen = RngStream(cfg.batch.seed).generator()
    out = P0.points.copy()
    done = np.zeros(n, dtype=bool)
    trace = DenoiseTrace()

    idx = gen.choice(n, size=cfg.batch.batch_size, replace=False)
    mask = np.ones(idx.size, dtype=bool)
    while True:
        pts, btrace = _adam_loop(out[idx], out[idx], mask, Q, cfg)
        trace.extend(btrace)
        if btrace.aborted:
            break
        out[idx[mask]] = pts[mask]
        done[idx[mask]] = True
        todo = np.flatnonzero(~done)
        if todo.size == 0:
            break
        fresh = gen.choice(todo, size=min(cfg.batch.mix_size, todo.size),
                           replace=False)
        anchors = gen.choice(np.flatnonzero(done), size=cfg.batch.mix_size,
                             replace=False)
        idx = np.concatenate([fresh, anchors])
        mask = np.zeros(idx.size, dtype=bool)
        mask[:fresh.size] = True
    return P0.with_points(out), trace
