import numpy as np
import pytest

from autojacobin import tangent
from autojacobin.tangent import (
    ProjectionOracle,
    estimate_all_tangents,
    estimate_tangent,
    knn_bruteforce,
    oracle_jacobian_fd,
    oracle_project,
    oracle_tangent_projector,
    projector,
)


def test_knn_collinear():
    X = np.array([[0.0, 1.0, 3.0]])
    np.testing.assert_array_equal(knn_bruteforce(X, 0, 2), [0, 1])


def test_knn_duplicates_self_first():
    X = np.zeros((2, 4))
    assert knn_bruteforce(X, 2, 1)[0] == 0  # all tied, ascending index wins
    order = knn_bruteforce(X, 2, 4)
    np.testing.assert_array_equal(order, [0, 1, 2, 3])


def test_knn_matches_full_sort_oracle():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 50))
    for i in range(0, 50, 7):
        d = np.sum((X - X[:, [i]]) ** 2, axis=0)
        full = np.argsort(d, kind="stable")
        for k in (1, 5, 50):
            np.testing.assert_array_equal(knn_bruteforce(X, i, k), full[:k])


def test_knn_bad_k():
    X = np.zeros((2, 3))
    with pytest.raises(ValueError):
        knn_bruteforce(X, 0, 4)
    with pytest.raises(ValueError):
        knn_bruteforce(X, 0, 0)


def test_estimate_tangent_plane():
    # points exactly on span{e1, e2} in R^3
    rng = np.random.default_rng(1)
    X = np.zeros((3, 40))
    X[:2] = rng.standard_normal((2, 40))
    t = estimate_tangent(X, 0, 2)
    assert t.rank == 2
    np.testing.assert_allclose(projector(t), np.diag([1.0, 1.0, 0.0]), atol=1e-8)


def test_estimate_tangent_degenerate():
    X = np.ones((3, 10))
    t = estimate_tangent(X, 4, 2)
    assert t.degenerate and t.rank == 0
    np.testing.assert_array_equal(projector(t), np.zeros((3, 3)))


def test_estimate_tangent_sphere_orthogonal_to_radius():
    rng = np.random.default_rng(2)
    m = np.array([0.0, 0.0, 1.0])
    # tight cap of on-sphere neighbors around m
    pts = [m]
    while len(pts) < 30:
        v = m + 1e-2 * rng.standard_normal(3)
        pts.append(v / np.linalg.norm(v))
    X = np.stack(pts, axis=1)
    t = estimate_tangent(X, 0, 2)
    assert t.rank == 2
    # basis directions nearly orthogonal to m
    assert np.max(np.abs(m @ t.basis)) < 1e-2


def test_estimate_tangent_needs_enough_points():
    with pytest.raises(ValueError):
        estimate_tangent(np.zeros((4, 5)), 0, 2)


def test_basis_orthonormal_and_projector_idempotent():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((5, 60))
    for t in estimate_all_tangents(X, 3):
        r = t.rank
        gram = t.basis.T @ t.basis
        assert np.max(np.abs(gram - np.eye(r))) < 1e-10
        A = projector(t)
        np.testing.assert_allclose(A @ A, A, atol=1e-12)
        np.testing.assert_allclose(A.T, A, atol=1e-12)
        assert np.trace(A) == pytest.approx(r, abs=1e-9)


def test_oracle_project_affine():
    o = ProjectionOracle(kind="affine-subspace", mean=np.zeros(3),
                         basis=np.eye(3)[:, :2])
    np.testing.assert_allclose(oracle_project(o, np.array([1.0, 2.0, 3.0])),
                               [1.0, 2.0, 0.0])


def test_oracle_project_sphere():
    o = ProjectionOracle(kind="unit-sphere")
    np.testing.assert_allclose(oracle_project(o, np.array([0.0, 0.0, 2.0])),
                               [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        oracle_project(o, np.zeros(3))


def test_oracle_project_fixes_manifold_points():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    mu = rng.standard_normal(6)
    o = ProjectionOracle(kind="affine-subspace", mean=mu, basis=Q)
    m = mu + Q @ rng.standard_normal(2)
    np.testing.assert_allclose(oracle_project(o, m), m, atol=1e-12)


def test_oracle_rejects_bad_kind_and_basis():
    with pytest.raises(ValueError):
        ProjectionOracle(kind="torus")
    with pytest.raises(ValueError):
        ProjectionOracle(kind="affine-subspace", mean=np.zeros(3),
                         basis=np.ones((3, 2)))


def test_jacobian_fd_affine_plane():
    o = ProjectionOracle(kind="affine-subspace", mean=np.zeros(3),
                         basis=np.eye(3)[:, :2])
    J = oracle_jacobian_fd(o, np.array([0.5, -0.2, 0.0]), h=1e-5)
    np.testing.assert_allclose(J, np.diag([1.0, 1.0, 0.0]), atol=1e-9)


def test_jacobian_fd_sphere_pole_and_random():
    o = ProjectionOracle(kind="unit-sphere")
    m = np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(oracle_jacobian_fd(o, m, 1e-5),
                               np.diag([1.0, 1.0, 0.0]), atol=1e-6)
    rng = np.random.default_rng(5)
    m = rng.standard_normal(4)
    m /= np.linalg.norm(m)
    np.testing.assert_allclose(oracle_jacobian_fd(o, m, 1e-5),
                               np.eye(4) - np.outer(m, m), atol=1e-6)


def test_fd_jacobian_matches_analytic_projector():
    rng = np.random.default_rng(6)
    for D in (3, 5, 8):
        Q, _ = np.linalg.qr(rng.standard_normal((D, 2)))
        mu = rng.standard_normal(D)
        o = ProjectionOracle(kind="affine-subspace", mean=mu, basis=Q)
        m = mu + Q @ rng.standard_normal(2)
        err = np.max(np.abs(oracle_jacobian_fd(o, m, 1e-5)
                            - oracle_tangent_projector(o, m)))
        assert err < 1e-5
