import numpy as np
import pytest

from windclear.kernel import (apply_jacobian_second, jacobian_contract,
                              kernel_block, kernel_mod, kernel_mod_jacobian)


def fd_jacobian(x, y, w, wrt, step=1e-7):
    """Central-difference oracle for the kernel Jacobian."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d = x.shape[0]
    out = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        if wrt == "second":
            out[:, k] = (kernel_mod(x, y + e, w) - kernel_mod(x, y - e, w)) / (2 * step)
        else:
            out[:, k] = (kernel_mod(x + e, y, w) - kernel_mod(x - e, y, w)) / (2 * step)
    return out


def test_far_field_values():
    # hand values: 3D r=1 along x gives -1/(4 pi); 2D r=1 gives -1/(2 pi)
    k3 = kernel_mod([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], 0.04)
    assert np.allclose(k3, [-1.0 / (4 * np.pi), 0.0, 0.0])
    k2 = kernel_mod([1.0, 0.0], [0.0, 0.0], 0.04)
    assert np.allclose(k2, [-1.0 / (2 * np.pi), 0.0])


def test_near_field_is_linear_clamp():
    w = 0.1
    x = np.array([0.03, 0.0, 0.0])
    y = np.zeros(3)
    expected = -x / (4 * np.pi * w ** 3)
    assert np.allclose(kernel_mod(x, y, w), expected)


def test_coincident_points_give_zero():
    assert np.array_equal(kernel_mod([0.2, 0.3], [0.2, 0.3], 0.04), [0.0, 0.0])


def test_antisymmetry():
    rng = np.random.default_rng(0)
    for d in (2, 3):
        x, y = rng.normal(size=(2, d))
        assert np.allclose(kernel_mod(x, y, 0.04), -kernel_mod(y, x, 0.04))


def test_continuity_at_branch_radius():
    w = 0.05
    for d in (2, 3):
        u = np.zeros(d)
        u[0] = 1.0
        inner = kernel_mod((w - 1e-12) * u, np.zeros(d), w)
        outer = kernel_mod((w + 1e-12) * u, np.zeros(d), w)
        assert np.allclose(inner, outer, atol=1e-9)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("scale", [0.01, 0.2])  # near and far branches
def test_jacobian_matches_finite_differences(dim, scale):
    rng = np.random.default_rng(7)
    w = 0.05
    for _ in range(10):
        x = rng.normal(size=dim) * scale
        y = rng.normal(size=dim) * scale
        r = np.linalg.norm(x - y)
        if abs(r - w) < 1e-3:
            continue
        for wrt in ("first", "second"):
            ana = kernel_mod_jacobian(x, y, w, wrt)
            num = fd_jacobian(x, y, w, wrt)
            assert np.allclose(ana, num, rtol=1e-5, atol=1e-7)


def test_jacobian_wrt_argument_sign():
    x = np.array([0.3, 0.1, -0.2])
    y = np.array([0.0, 0.05, 0.0])
    jy = kernel_mod_jacobian(x, y, 0.04, "second")
    jx = kernel_mod_jacobian(x, y, 0.04, "first")
    assert np.array_equal(jx, -jy)
    with pytest.raises(ValueError):
        kernel_mod_jacobian(x, y, 0.04, "both")


def test_kernel_block_matches_scalar():
    rng = np.random.default_rng(3)
    for d in (2, 3):
        X = rng.normal(size=(5, d)) * 0.1
        Y = rng.normal(size=(4, d)) * 0.1
        block = kernel_block(X, Y, 0.08)
        for j in range(5):
            for i in range(4):
                assert np.allclose(block[j, i], kernel_mod(X[j], Y[i], 0.08))


def test_kernel_block_diagonal_zero():
    X = np.random.default_rng(1).normal(size=(6, 3))
    block = kernel_block(X, X, 0.04)
    diag = block[np.arange(6), np.arange(6)]
    assert np.array_equal(diag, np.zeros((6, 3)))
    assert np.all(np.isfinite(block))


def test_jacobian_contract_matches_explicit():
    rng = np.random.default_rng(11)
    w = 0.07
    for d in (2, 3):
        X = rng.normal(size=(4, d)) * 0.1
        Y = rng.normal(size=(3, d)) * 0.1
        G = rng.normal(size=(4, 3, d))
        out = apply_jacobian_second(X, Y, G, w)
        for j in range(4):
            for i in range(3):
                jy = kernel_mod_jacobian(X[j], Y[i], w, "second")
                assert np.allclose(out[j, i], jy.T @ G[j, i])


def test_jacobian_contract_far_branch_at_exact_radius():
    w = 0.1
    u = np.array([[[w, 0.0]]])
    r = np.array([[w]])
    G = np.array([[[1.0, 0.0]]])
    out = jacobian_contract(u, r, G, w)
    jy = kernel_mod_jacobian([w, 0.0], [0.0, 0.0], w, "second")
    assert np.allclose(out[0, 0], jy.T @ G[0, 0])
