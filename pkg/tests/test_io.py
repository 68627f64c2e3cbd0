import numpy as np
import pytest

from windclear.denoise import DenoiseTrace
from windclear.io import (read_cloud, read_ply, read_xyz, write_grid,
                          write_ply, write_trace, write_xyz)
from windclear.system import WceReport


def random_points(n, d, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, size=(n, d))


def test_xyz_roundtrip_is_exact(tmp_path):
    pts = random_points(20, 3)
    path = tmp_path / "cloud.xyz"
    write_xyz(path, pts)
    back = read_xyz(path)
    assert np.array_equal(back, pts)


def test_xyz_comments_and_blank_lines(tmp_path):
    path = tmp_path / "cloud.xy"
    path.write_text("# header\n0.5 1.5\n\n1.0 2.0  # trailing\n")
    pts = read_xyz(path)
    assert np.array_equal(pts, [[0.5, 1.5], [1.0, 2.0]])


def test_xyz_empty_file_raises(tmp_path):
    path = tmp_path / "empty.xyz"
    path.write_text("# nothing here\n")
    with pytest.raises(ValueError, match="empty cloud"):
        read_xyz(path)


def test_xyz_ragged_rows_raise(tmp_path):
    path = tmp_path / "bad.xyz"
    path.write_text("1 2 3\n4 5\n")
    with pytest.raises(ValueError, match="column count"):
        read_xyz(path)


def test_ply_roundtrip_with_normals(tmp_path):
    pts = random_points(10, 3, seed=1)
    normals = random_points(10, 3, seed=2)
    path = tmp_path / "cloud.ply"
    write_ply(path, pts, normals)
    back_pts, back_normals = read_ply(path)
    assert np.array_equal(back_pts, pts)
    assert np.array_equal(back_normals, normals)


def test_ply_roundtrip_2d_no_normals(tmp_path):
    pts = random_points(5, 2, seed=3)
    path = tmp_path / "cloud.ply"
    write_ply(path, pts)
    back_pts, back_normals = read_ply(path)
    assert np.array_equal(back_pts, pts)
    assert back_normals is None


def test_ply_rejects_non_ply(tmp_path):
    path = tmp_path / "fake.ply"
    path.write_text("not a ply\n")
    with pytest.raises(ValueError, match="not a PLY"):
        read_ply(path)


def test_read_cloud_dispatches_on_suffix(tmp_path):
    pts = random_points(6, 3, seed=4)
    ply = tmp_path / "a.ply"
    xyz = tmp_path / "a.xyz"
    write_ply(ply, pts)
    write_xyz(xyz, pts)
    assert np.array_equal(read_cloud(ply).points, pts)
    assert np.array_equal(read_cloud(xyz).points, pts)


def test_write_grid_sidecar(tmp_path):
    import json
    grid = np.arange(16.0).reshape(4, 4)
    csv = tmp_path / "field.csv"
    write_grid(csv, grid, extent=0.7)
    back = np.loadtxt(csv, delimiter=",")
    assert np.array_equal(back, grid)
    meta = json.loads((tmp_path / "field.json").read_text())
    assert meta == {"extent": 0.7, "resolution": 4, "dim": 2,
                    "order": "row-major"}


def test_write_trace_columns(tmp_path):
    trace = DenoiseTrace()
    for k in range(3):
        rep = WceReport(total=1.0 + k, data_term=0.5, box_term=0.3,
                        reg_term=0.2 + k)
        trace.loss.append(2.0 + k)
        trace.wce.append(rep.total)
        trace.reports.append(rep)
        trace.seconds.append(0.1)
    path = tmp_path / "trace.csv"
    write_trace(path, trace)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iter,loss,wce,data_term,box_term,reg_term,seconds"
    assert len(lines) == 4
    row = lines[1].split(",")
    assert row[0] == "0"
    assert [float(v) for v in row[1:6]] == [2.0, 1.0, 0.5, 0.3, 0.2]
