"""Command-line interface.

Subcommands: make, noise, wce, denoise, field, metrics, bench.
Exit codes: 0 success, 1 numerical failure, 2 input error.

All flags can also come from a plain ``key = value`` config file passed
with --config; explicit flags take precedence.  Defaults: w=0.04,
alpha=0.5; eta=50 and box half extent 0.7 for WCE measurement, eta=10 and
box half extent 0.6 for denoising; lambda=20; 100 iterations.
"""

from __future__ import annotations

import json
import sys
import time
from contextlib import nullcontext

import click
import numpy as np

from . import core, gradient, io as wio, metrics as wm, system
from .core import PointCloud, RngStream, WindingConfig
from .denoise import AdamParams, BatchParams, DenoiseConfig
from .denoise import denoise as run_denoise
from .denoise import denoise_batched
from .system import SolveFailure


def _fail_input(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(2)


def _fail_numeric(msg: str):
    click.echo(f"numerical failure: {msg}", err=True)
    sys.exit(1)


def _load_cloud(path) -> PointCloud:
    try:
        return wio.read_cloud(path)
    except (OSError, ValueError) as exc:
        _fail_input(str(exc))


def _parse_config_file(path) -> dict:
    values = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected 'key = value', got: {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _winding_config(width, alpha, eta, box, box_samples, seed) -> WindingConfig:
    return WindingConfig(width=width, alpha=alpha, eta=eta,
                         box_half_extent=box, box_sample_count=box_samples,
                         seed=seed)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="key = value config file; flags win.")
@click.option("--threads", type=int, default=None,
              help="cap BLAS worker threads (default: all available).")
@click.pass_context
def main(ctx, config_path, threads):
    """Point-cloud quality via the winding clearness error."""
    if config_path:
        try:
            defaults = _parse_config_file(config_path)
        except (OSError, ValueError) as exc:
            _fail_input(str(exc))
        ctx.default_map = {cmd: defaults for cmd in main.commands}
    limiter = nullcontext()
    if threads is not None:
        import threadpoolctl
        limiter = threadpoolctl.threadpool_limits(limits=threads)
    ctx.with_resource(limiter)


def _winding_options(eta_default=50.0, box_default=0.7):
    # eta=50 / h=0.7 are the 2D WCE-study defaults; denoising uses 10 / 0.6
    def wrap(fn):
        for opt in reversed([
            click.option("--width", type=float, default=0.04,
                         show_default=True, help="kernel clamp radius w."),
            click.option("--alpha", type=float, default=0.5,
                         show_default=True, help="diagonal regularizer weight."),
            click.option("--eta", type=float, default=eta_default,
                         show_default=True, help="box-constraint weight."),
            click.option("--box", type=float, default=box_default,
                         show_default=True, help="box half extent h."),
            click.option("--box-samples", type=int, default=None,
                         help="box sample count M [default: 2N]."),
            click.option("--seed", type=int, default=0, show_default=True),
        ]):
            fn = opt(fn)
        return fn
    return wrap


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@_winding_options()
@click.option("--sweep", default=None,
              help="comma-separated noise sigmas; prints a WCE table.")
@click.option("--sweep-seeds", type=int, default=1, show_default=True,
              help="noise seeds per sigma in sweep mode.")
def wce(input_path, width, alpha, eta, box, box_samples, seed, sweep,
        sweep_seeds):
    """Print the winding clearness error of a cloud as JSON."""
    cloud = _load_cloud(input_path)
    cfg = _winding_config(width, alpha, eta, box, box_samples, seed)
    m = box_samples if box_samples is not None else 2 * len(cloud)
    try:
        Q = core.sample_bounding_box(cloud.dim, box, m, RngStream(seed))
        if sweep is None:
            report, _ = system.winding_clearness(cloud, Q, cfg)
            click.echo(json.dumps(report.as_dict()))
            return
        sigmas = [float(s) for s in sweep.split(",")]
        click.echo("sigma\t" + "\t".join(f"{s:g}" for s in sigmas))
        for k in range(sweep_seeds):
            row = []
            for s in sigmas:
                noisy = core.add_gaussian_noise(cloud, s, RngStream(seed + k, 1))
                rep, _ = system.winding_clearness(noisy, Q, cfg)
                row.append(rep.total * 1e3)
            click.echo(f"WCE x1e3 (seed {seed + k})\t"
                       + "\t".join(f"{v:.3f}" for v in row))
    except SolveFailure as exc:
        _fail_numeric(str(exc))
    except ValueError as exc:
        _fail_input(str(exc))


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@_winding_options(eta_default=10.0, box_default=0.6)
@click.option("--lam", type=float, default=20.0, show_default=True,
              help="pull-back weight lambda.")
@click.option("--iters", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch/--no-batch", default=False,
              help="multi-batch mode for large clouds.")
@click.option("--batch-size", type=int, default=5000, show_default=True)
@click.option("--mix-size", type=int, default=2500, show_default=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="write per-iteration loss CSV here.")
def denoise(input_path, output_path, width, alpha, eta, box, box_samples,
            seed, lam, iters, lr, batch, batch_size, mix_size, trace_path):
    """Denoise a cloud by gradient descent on the winding clearness error."""
    cloud = _load_cloud(input_path)
    cfg = DenoiseConfig(
        lam=lam, iters=iters,
        adam=AdamParams(lr=lr),
        winding=_winding_config(width, alpha, eta, box, box_samples, seed),
        batch=BatchParams(batch_size=batch_size, mix_size=mix_size,
                          seed=seed))
    try:
        if batch and len(cloud) > batch_size:
            click.echo(f"batched mode: {len(cloud)} points, "
                       f"batch {batch_size}, mix {mix_size}", err=True)
            result, trace = denoise_batched(cloud, cfg)
        else:
            result, trace = run_denoise(cloud, cfg)
    except ValueError as exc:
        _fail_input(str(exc))
    wio.write_xyz(output_path, result.points)
    if trace_path:
        wio.write_trace(trace_path, trace)
    if trace.aborted:
        _fail_numeric("solve failed mid-run; wrote last valid cloud")
    click.echo(json.dumps({"initial_loss": trace.loss[0],
                           "final_loss": trace.loss[-1],
                           "initial_wce": trace.wce[0],
                           "final_wce": trace.wce[-1]}))


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_csv", type=click.Path())
@_winding_options()
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--extent", type=float, default=0.7, show_default=True)
def field(input_path, output_csv, width, alpha, eta, box, box_samples, seed,
          resolution, extent):
    """Evaluate the winding field on a grid; writes CSV plus JSON sidecar."""
    cloud = _load_cloud(input_path)
    cfg = _winding_config(width, alpha, eta, box, box_samples, seed)
    m = box_samples if box_samples is not None else 2 * len(cloud)
    try:
        Q = core.sample_bounding_box(cloud.dim, box, m, RngStream(seed))
        _, mu = system.winding_clearness(cloud, Q, cfg)
        grid = system.field_grid(cloud, mu, resolution, extent, cfg)
    except SolveFailure as exc:
        _fail_numeric(str(exc))
    except ValueError as exc:
        _fail_input(str(exc))
    wio.write_grid(output_csv, grid, extent)


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("reference_path", type=click.Path(exists=True))
@_winding_options()
@click.option("--tau", type=float, default=wm.DEFAULT_FSCORE_TAU,
              show_default=True, help="F-score distance threshold.")
def metrics(input_path, reference_path, width, alpha, eta, box, box_samples,
            seed, tau):
    """Point-level CD/NC/F-score/MADS/WCE of a cloud against a reference.

    Normals for the input cloud come from its solved surfels; reference
    normals are taken from the file when present (PLY nx/ny/nz), otherwise
    NC is null.
    """
    cloud = _load_cloud(input_path)
    try:
        ref_pts, ref_normals = wio.read_ply(reference_path) \
            if str(reference_path).endswith(".ply") \
            else (wio.read_xyz(reference_path), None)
    except (OSError, ValueError) as exc:
        _fail_input(str(exc))
    cfg = _winding_config(width, alpha, eta, box, box_samples, seed)
    m = box_samples if box_samples is not None else 2 * len(cloud)
    try:
        Q = core.sample_bounding_box(cloud.dim, box, m, RngStream(seed))
        report, mu = system.winding_clearness(cloud, Q, cfg)
        nc = None
        if ref_normals is not None:
            normals = wm.normals_from_surfels(mu, cloud.dim)
            nc = wm.normal_consistency(cloud.points, normals,
                                       ref_pts, ref_normals)
        out = wm.MetricsReport(
            cd=wm.chamfer(cloud.points, ref_pts), nc=nc,
            fscore=wm.f_score(cloud.points, ref_pts, tau),
            mads=wm.mads(cloud.points, ref_pts), wce=report.total)
    except SolveFailure as exc:
        _fail_numeric(str(exc))
    except ValueError as exc:
        _fail_input(str(exc))
    click.echo(json.dumps(out.as_dict()))


@main.command()
@click.argument("shape", type=click.Choice(["circle", "rectangle", "sphere"]))
@click.argument("output_path", type=click.Path())
@click.option("--n", type=int, default=1000, show_default=True)
@click.option("--radius", type=float, default=0.5, show_default=True)
@click.option("--major", type=float, default=1.0, show_default=True)
@click.option("--minor", type=float, default=0.02, show_default=True)
def make(shape, output_path, n, radius, major, minor):
    """Generate a reference shape sampling and write it as XY(Z) text."""
    try:
        if shape == "circle":
            cloud = core.sample_circle(n, radius)
        elif shape == "rectangle":
            cloud = core.sample_rectangle(n, major, minor)
        else:
            cloud = core.sample_sphere(n, radius)
    except ValueError as exc:
        _fail_input(str(exc))
    wio.write_xyz(output_path, cloud.points)


@main.command()
@click.argument("input_path", type=click.Path(exists=True))
@click.argument("output_path", type=click.Path())
@click.option("--sigma", type=float, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
def noise(input_path, output_path, sigma, seed):
    """Add per-coordinate Gaussian noise."""
    cloud = _load_cloud(input_path)
    try:
        noisy = core.add_gaussian_noise(cloud, sigma, RngStream(seed))
    except ValueError as exc:
        _fail_input(str(exc))
    wio.write_xyz(output_path, noisy.points)


@main.command()
@click.option("--sizes", default="250,500,1000", show_default=True,
              help="comma-separated point counts.")
@click.option("--steps", type=int, default=3, show_default=True,
              help="gradient evaluations timed per size.")
@click.option("--dim", type=int, default=3, show_default=True)
def bench(sizes, steps, dim):
    """Time gradient evaluations across sizes; prints JSON with a fit."""
    try:
        counts = [int(s) for s in sizes.split(",")]
    except ValueError as exc:
        _fail_input(str(exc))
    rows = []
    for n in counts:
        shape = core.sample_sphere(n, 0.5) if dim == 3 \
            else core.sample_circle(n, 0.5)
        cloud = core.add_gaussian_noise(shape, 0.005, RngStream(0))
        cfg = WindingConfig(eta=10.0, box_half_extent=0.6)
        Q = core.sample_bounding_box(dim, 0.6, 2 * n, RngStream(0))
        start = time.perf_counter()
        for _ in range(steps):
            gradient.grad_wce(cloud, Q, cfg)
        rows.append({"n": n,
                     "seconds_per_step": (time.perf_counter() - start) / steps})
    logs = np.log([r["n"] for r in rows])
    logt = np.log([r["seconds_per_step"] for r in rows])
    exponent = float(np.polyfit(logs, logt, 1)[0]) if len(rows) > 1 else None
    click.echo(json.dumps({"dim": dim, "rows": rows,
                           "fit_exponent": exponent}))


if __name__ == "__main__":
    main()
