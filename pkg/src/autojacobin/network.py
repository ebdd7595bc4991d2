"""Three-layer tanh auto-encoder: forward pass, analytic input-output
Jacobian, the composite objective, and analytic gradients.

The objective over a batch of n columns is

    sum_i ( ||x_i - z_i||^2 + ||J_i - A_i||_F^2 ) + alpha * S(Y Y' - n I)

where J_i is the input-output Jacobian at x_i, A_i = T_i T_i' the tangent
projector, and S(M) = sum_jk sqrt(M_jk^2 + eps) smooths the entrywise
1-norm. Jacobian orientation: J(i, j) = d z_j / d x_i.

Gradient correctness is defined by agreement with central finite
differences of the objective (see grad_check).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass
class NetworkParams:
    w1: np.ndarray  # (d, D)
    w2: np.ndarray  # (D, d)
    b1: np.ndarray  # (d,)
    b2: np.ndarray  # (D,)
    scale: float = 1.0

    @property
    def dims(self) -> int:
        return self.w1.shape[1]

    @property
    def bits(self) -> int:
        return self.w1.shape[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.w1.copy(), self.w2.copy(), self.b1.copy(),
                             self.b2.copy(), self.scale)


@dataclass
class ForwardCache:
    y: np.ndarray  # hidden activation
    z: np.ndarray  # output activation


@dataclass
class ObjectiveConfig:
    alpha: float = 0.1
    epsilon: float = 1e-4
    # target diagonal of Y Y'; None means the batch size of the call
    batch_target: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass
class GradientSet:
    dw1: np.ndarray
    dw2: np.ndarray
    db1: np.ndarray
    db2: np.ndarray

    @staticmethod
    def zeros(p: NetworkParams) -> "GradientSet":
        return GradientSet(np.zeros_like(p.w1), np.zeros_like(p.w2),
                           np.zeros_like(p.b1), np.zeros_like(p.b2))

    def __iadd__(self, other: "GradientSet") -> "GradientSet":
        self.dw1 += other.dw1
        self.dw2 += other.dw2
        self.db1 += other.db1
        self.db2 += other.db2
        return self


@dataclass
class ObjectiveParts:
    recon: float
    jacobian: float
    binary: float

    @property
    def total(self) -> float:
        return self.recon + self.jacobian + self.binary


def forward(p: NetworkParams, x: np.ndarray) -> ForwardCache:
    """y = tanh(W1 x + b1), z = tanh(W2 y + b2) for a single column."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    y = np.tanh(p.w1 @ x + p.b1)
    z = np.tanh(p.w2 @ y + p.b2)
    return ForwardCache(y=y, z=z)


def forward_batch(p: NetworkParams, X: np.ndarray):
    """(Y, Z) for a (D, n) batch; Y is (d, n), Z is (D, n)."""
    Y = np.tanh(p.w1 @ X + p.b1[:, None])
    Z = np.tanh(p.w2 @ Y + p.b2[:, None])
    return Y, Z


def jacobian(p: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Input-output Jacobian, J(i, j) = d z_j / d x_i."""
    c = forward(p, x)
    a = 1.0 - c.y**2
    cz = 1.0 - c.z**2
    # J = W1' (W2' . (1-y^2)(1-z^2)')
    return p.w1.T @ (p.w2.T * np.outer(a, cz))


# --- per-term values and gradients (batch layout: X is (D, n)) ---


def _recon_term(p, Xin, Xtarget, Y, Z):
    diff = Z - Xtarget
    value = float(np.sum(diff * diff))
    d2 = 2.0 * diff * (1.0 - Z * Z)
    d1 = (p.w2.T @ d2) * (1.0 - Y * Y)
    return value, GradientSet(d1 @ Xin.T, d2 @ Y.T, d1.sum(axis=1), d2.sum(axis=1))


def _binary_term(p, Xin, Y, alpha, eps, n_target):
    d = Y.shape[0]
    S = Y @ Y.T - n_target * np.eye(d)
    value = float(alpha * np.sum(np.sqrt(S * S + eps)))
    G = alpha * S / np.sqrt(S * S + eps)
    dU = (2.0 * G @ Y) * (1.0 - Y * Y)
    g = GradientSet.zeros(p)
    g.dw1 += dU @ Xin.T
    g.db1 += dU.sum(axis=1)
    return value, g


_JAC_CHUNK = 256  # bounds the (n, D, D) work arrays


def _jacobian_term(p, Xin, Y, Z, projectors):
    n = Xin.shape[1]
    value = 0.0
    total = GradientSet.zeros(p)
    for lo in range(0, n, _JAC_CHUNK):
        hi = min(lo + _JAC_CHUNK, n)
        A3 = np.stack([np.asarray(projectors[i]) for i in range(lo, hi)])
        Xc = Xin[:, lo:hi]
        Yc, Zc = Y[:, lo:hi], Z[:, lo:hi]
        At = (1.0 - Yc * Yc).T  # (c, d)
        Ct = (1.0 - Zc * Zc).T  # (c, D)
        K = np.einsum("ki,nk,jk->nij", p.w1, At, p.w2, optimize=True)
        J = K * Ct[:, None, :]
        R = 2.0 * (J - A3)
        value += float(np.sum((J - A3) ** 2))
        P = R * Ct[:, None, :]
        dw1 = np.einsum("nk,jk,nij->ki", At, p.w2, P, optimize=True)
        dw2 = np.einsum("nji,kj,nk->ik", P, p.w1, At, optimize=True)
        # chain through a = 1 - y^2
        gu = -2.0 * Yc.T * At * np.einsum("ki,nij,jk->nk", p.w1, P, p.w2, optimize=True)
        dw1 += gu.T @ Xc.T
        db1 = gu.sum(axis=0)
        # chain through c = 1 - z^2
        gv = -2.0 * Zc.T * Ct * np.sum(R * K, axis=1)  # (c, D)
        dw2 += gv.T @ Yc.T
        db2 = gv.sum(axis=0)
        du2 = (p.w2.T @ gv.T) * At.T
        dw1 += du2 @ Xc.T
        db1 = db1 + du2.sum(axis=1)
        total += GradientSet(dw1, dw2, db1, db2)
    return value, total


def _contractive_term(p, Xin, Y, lam):
    At = (1.0 - Y * Y).T  # (n, d)
    s = np.sum(p.w1 * p.w1, axis=1)  # hidden-row norms squared
    value = float(lam * np.sum(At * At * s[None, :]))
    dw1 = 2.0 * lam * np.sum(At * At, axis=0)[:, None] * p.w1
    gu = -4.0 * lam * At * At * Y.T * s[None, :]
    dw1 += gu.T @ Xin.T
    g = GradientSet.zeros(p)
    g.dw1 += dw1
    g.db1 += gu.sum(axis=0)
    return value, g


def objective(p: NetworkParams, batch: np.ndarray, tangents, cfg: ObjectiveConfig):
    """Full objective on a batch; tangents is one D x D projector per column."""
    n = batch.shape[1]
    if len(tangents) != n:
        raise ValueError(f"{len(tangents)} projectors for {n} points")
    Y, Z = forward_batch(p, batch)
    recon, _ = _recon_term(p, batch, batch, Y, Z)
    jac, _ = _jacobian_term(p, batch, Y, Z, tangents)
    n_target = cfg.batch_target if cfg.batch_target is not None else n
    binary, _ = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon, n_target)
    parts = ObjectiveParts(recon=recon, jacobian=jac, binary=binary)
    return parts.total, parts


def gradients(p: NetworkParams, batch: np.ndarray, tangents, cfg: ObjectiveConfig) -> GradientSet:
    """Analytic gradient of objective() w.r.t. all four parameter blocks."""
    n = batch.shape[1]
    if len(tangents) != n:
        raise ValueError(f"{len(tangents)} projectors for {n} points")
    Y, Z = forward_batch(p, batch)
    g = GradientSet.zeros(p)
    _, gr = _recon_term(p, batch, batch, Y, Z)
    g += gr
    _, gj = _jacobian_term(p, batch, Y, Z, tangents)
    g += gj
    n_target = cfg.batch_target if cfg.batch_target is not None else n
    _, gb = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon, n_target)
    g += gb
    return g


# --- parameter vector packing and finite-difference checking ---


def pack_params(p: NetworkParams) -> np.ndarray:
    return np.concatenate([p.w1.ravel(), p.w2.ravel(), p.b1, p.b2])


def unpack_params(theta: np.ndarray, template: NetworkParams) -> NetworkParams:
    d, D = template.w1.shape
    o = 0
    w1 = theta[o:o + d * D].reshape(d, D); o += d * D
    w2 = theta[o:o + D * d].reshape(D, d); o += D * d
    b1 = theta[o:o + d]; o += d
    b2 = theta[o:o + D]; o += D
    return replace(template, w1=w1, w2=w2, b1=b1, b2=b2)


def pack_gradient(g: GradientSet) -> np.ndarray:
    return np.concatenate([g.dw1.ravel(), g.dw2.ravel(), g.db1, g.db2])


def fd_gradient(f, theta: np.ndarray, h: float) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of theta."""
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (f(theta + e) - f(theta - e)) / (2.0 * h)
    return g


def grad_check(p: NetworkParams, batch: np.ndarray, tangents, cfg: ObjectiveConfig,
               h: float = 1e-6) -> float:
    """Max relative error |analytic - fd| / max(1, |fd|) over all parameters."""
    def value(theta):
        return objective(unpack_params(theta, p), batch, tangents, cfg)[0]

    analytic = pack_gradient(gradients(p, batch, tangents, cfg))
    fd = fd_gradient(value, pack_params(p), h)
    return float(np.max(np.abs(analytic - fd) / np.maximum(1.0, np.abs(fd))))
