"""Synthetic desk-scale datasets: the 2-D simplex toy set and a curved
low-dimensional manifold embedded in higher dimension."""

from __future__ import annotations

import numpy as np


def simplex_points(n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform on {x1 + x2 + x3 = 1, xi > 0}, as a (3, n) matrix."""
    return rng.dirichlet(np.ones(3), size=n).T


def curved_manifold(n: int, intrinsic_dim: int, ambient_dim: int,
                    rng: np.random.Generator, noise: float = 0.01,
                    frequency_scale: float = 1.5):
    """Points on a smooth image of [0,1]^r under a random cosine map.

    x = cos(Omega t + phi) / sqrt(ambient_dim) + Gaussian noise, with a
    fixed random (ambient_dim, r) frequency matrix Omega and phases phi.
    Returns (X, params) where params regenerates the same map for more
    draws via curved_manifold_more.
    """
    omega = rng.standard_normal((ambient_dim, intrinsic_dim)) * frequency_scale
    phi = rng.uniform(0.0, 2.0 * np.pi, size=ambient_dim)
    X = _cosine_map(n, omega, phi, rng, noise)
    return X, (omega, phi, noise)


def curved_manifold_more(n: int, params, rng: np.random.Generator) -> np.ndarray:
    """More draws from the same manifold map produced by curved_manifold."""
    omega, phi, noise = params
    return _cosine_map(n, omega, phi, rng, noise)


def _cosine_map(n, omega, phi, rng, noise):
    ambient_dim, intrinsic_dim = omega.shape
    t = rng.uniform(0.0, 1.0, size=(intrinsic_dim, n))
    X = np.cos(omega @ t + phi[:, None]) / np.sqrt(ambient_dim)
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return X
