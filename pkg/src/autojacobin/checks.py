"""Finite-difference validation of every analytic gradient path.

Used by the gradcheck CLI command and the test suite. Reported errors
are max over parameters of |analytic - fd| / max(1, |fd|).
"""

from __future__ import annotations

import numpy as np

from . import variants as var
from .network import (
    GradientSet,
    NetworkParams,
    ObjectiveConfig,
    _binary_term,
    _contractive_term,
    _jacobian_term,
    _recon_term,
    fd_gradient,
    forward_batch,
    gradients,
    objective,
    pack_gradient,
    pack_params,
    unpack_params,
)


def random_instance(D: int, d: int, n: int, seed: int):
    """Random params, batch and tangent projectors for gradient checking."""
    rng = np.random.default_rng(seed)
    p = NetworkParams(
        w1=0.5 * rng.standard_normal((d, D)),
        w2=0.5 * rng.standard_normal((D, d)),
        b1=0.1 * rng.standard_normal(d),
        b2=0.1 * rng.standard_normal(D),
    )
    batch = rng.uniform(-0.8, 0.8, size=(D, n))
    projs = []
    for _ in range(n):
        r = int(rng.integers(1, d + 1))
        Q, _ = np.linalg.qr(rng.standard_normal((D, r)))
        projs.append(Q @ Q.T)
    return p, batch, projs


def _rel_error(analytic: np.ndarray, fd: np.ndarray) -> float:
    return float(np.max(np.abs(analytic - fd) / np.maximum(1.0, np.abs(fd))))


def _check(value_fn, grad_fn, p: NetworkParams, h: float) -> float:
    analytic = pack_gradient(grad_fn(p))
    fd = fd_gradient(lambda th: value_fn(unpack_params(th, p)), pack_params(p), h)
    return _rel_error(analytic, fd)


def check_gradients(kind: str, D: int = 8, d: int = 4, n: int = 5,
                    seed: int = 0, alpha: float = 0.1, epsilon: float = 1e-4,
                    h: float = 1e-6, lambda_c: float = 0.01,
                    corruption_t: float = 0.2) -> dict[str, float]:
    """Per-term and total max relative fd errors for one variant."""
    p, batch, projs = random_instance(D, d, n, seed)
    cfg = ObjectiveConfig(alpha=alpha, epsilon=epsilon)
    rng = np.random.default_rng(seed + 1)

    def with_fw(term_fn):
        # each term helper needs the forward activations of its input
        def value(q):
            Y, Z = forward_batch(q, batch)
            return term_fn(q, Y, Z)[0]

        def grad(q):
            Y, Z = forward_batch(q, batch)
            return term_fn(q, Y, Z)[1]

        return value, grad

    errors: dict[str, float] = {}

    if kind == "auto-jacobin":
        errors["recon"] = _check(*with_fw(
            lambda q, Y, Z: _recon_term(q, batch, batch, Y, Z)), p, h)
        errors["jacobian"] = _check(*with_fw(
            lambda q, Y, Z: _jacobian_term(q, batch, Y, Z, projs)), p, h)
        errors["binary"] = _check(*with_fw(
            lambda q, Y, Z: _binary_term(q, batch, Y, alpha, epsilon, n)), p, h)
        errors["total"] = _check(
            lambda q: objective(q, batch, projs, cfg)[0],
            lambda q: gradients(q, batch, projs, cfg), p, h)
    elif kind == "autobin":
        errors["recon"] = _check(*with_fw(
            lambda q, Y, Z: _recon_term(q, batch, batch, Y, Z)), p, h)
        errors["binary"] = _check(*with_fw(
            lambda q, Y, Z: _binary_term(q, batch, Y, alpha, epsilon, n)), p, h)
        errors["total"] = _check(
            lambda q: var.autobin_objective(q, batch, cfg)[0],
            lambda q: var.autobin_gradients(q, batch, cfg), p, h)
    elif kind == "dautobin":
        corrupted = var.corrupt_mask(batch, corruption_t, rng)  # frozen mask
        errors["recon"] = _check(
            lambda q: _recon_term(q, corrupted, batch,
                                  *forward_batch(q, corrupted))[0],
            lambda q: _recon_term(q, corrupted, batch,
                                  *forward_batch(q, corrupted))[1], p, h)
        errors["binary"] = _check(
            lambda q: _binary_term(q, corrupted, forward_batch(q, corrupted)[0],
                                   alpha, epsilon, n)[0],
            lambda q: _binary_term(q, corrupted, forward_batch(q, corrupted)[0],
                                   alpha, epsilon, n)[1], p, h)
        errors["total"] = _check(
            lambda q: var.dautobin_objective(q, batch, corrupted, cfg)[0],
            lambda q: var.dautobin_gradients(q, batch, corrupted, cfg), p, h)
    elif kind == "cautobin":
        errors["recon"] = _check(*with_fw(
            lambda q, Y, Z: _recon_term(q, batch, batch, Y, Z)), p, h)
        errors["contractive"] = _check(*with_fw(
            lambda q, Y, Z: _contractive_term(q, batch, Y, lambda_c)), p, h)
        errors["binary"] = _check(*with_fw(
            lambda q, Y, Z: _binary_term(q, batch, Y, alpha, epsilon, n)), p, h)
        errors["total"] = _check(
            lambda q: var.cautobin_objective(q, batch, cfg, lambda_c)[0],
            lambda q: var.cautobin_gradients(q, batch, cfg, lambda_c), p, h)
    else:
        raise ValueError(f"no gradients to check for variant {kind!r}")

    return errors
