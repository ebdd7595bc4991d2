"""Comparison models sharing the same trainer: AutoBin (no Jacobian term),
DAutoBin (denoising), CAutoBin (contractive), and the LSH baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import (
    GradientSet,
    NetworkParams,
    ObjectiveConfig,
    ObjectiveParts,
    _binary_term,
    _contractive_term,
    _jacobian_term,
    _recon_term,
    forward_batch,
)

KINDS = ("auto-jacobin", "autobin", "dautobin", "cautobin", "lsh")

# search grids reported alongside the variants; other values permitted
CORRUPTION_GRID = (0.01, 0.05, 0.1, 0.2)
WEIGHT_GRID = (0.01, 0.1, 1.0, 10.0)


@dataclass
class VariantConfig:
    kind: str = "auto-jacobin"
    alpha: float = 0.1
    corruption_t: float = 0.1  # dautobin only
    lambda_c: float = 0.01     # cautobin only
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variant kind {self.kind!r}")
        if not 0.0 <= self.corruption_t <= 1.0:
            raise ValueError("corruption_t must lie in [0, 1]")
        if self.lambda_c < 0:
            raise ValueError("lambda_c must be >= 0")

    @property
    def needs_tangents(self) -> bool:
        return self.kind == "auto-jacobin"


def _n_target(cfg: ObjectiveConfig, n: int) -> int:
    return cfg.batch_target if cfg.batch_target is not None else n


def autobin_objective(p: NetworkParams, batch: np.ndarray, cfg: ObjectiveConfig):
    """Objective without the Jacobian term: recon + binary constraint."""
    Y, Z = forward_batch(p, batch)
    recon, _ = _recon_term(p, batch, batch, Y, Z)
    binary, _ = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon,
                             _n_target(cfg, batch.shape[1]))
    parts = ObjectiveParts(recon=recon, jacobian=0.0, binary=binary)
    return parts.total, parts


def autobin_gradients(p: NetworkParams, batch: np.ndarray, cfg: ObjectiveConfig) -> GradientSet:
    Y, Z = forward_batch(p, batch)
    g = GradientSet.zeros(p)
    _, gr = _recon_term(p, batch, batch, Y, Z)
    g += gr
    _, gb = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon,
                         _n_target(cfg, batch.shape[1]))
    g += gb
    return g


def corrupt_mask(x: np.ndarray, t: float, rng: np.random.Generator) -> np.ndarray:
    """Zero each entry independently with probability t (r_i <= t rule)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    r = rng.uniform(0.0, 1.0, size=x.shape)
    return np.where(r <= t, 0.0, x)


def dautobin_objective(p: NetworkParams, clean_batch: np.ndarray,
                       corrupted_batch: np.ndarray, cfg: ObjectiveConfig):
    """Denoising objective: reconstruct clean x from corrupted input.

    The binary term uses hidden codes of the corrupted input (the only
    input the network sees).
    """
    if clean_batch.shape != corrupted_batch.shape:
        raise ValueError("clean/corrupted batch shape mismatch")
    Y, Z = forward_batch(p, corrupted_batch)
    recon, _ = _recon_term(p, corrupted_batch, clean_batch, Y, Z)
    binary, _ = _binary_term(p, corrupted_batch, Y, cfg.alpha, cfg.epsilon,
                             _n_target(cfg, clean_batch.shape[1]))
    parts = ObjectiveParts(recon=recon, jacobian=0.0, binary=binary)
    return parts.total, parts


def dautobin_gradients(p: NetworkParams, clean_batch: np.ndarray,
                       corrupted_batch: np.ndarray, cfg: ObjectiveConfig) -> GradientSet:
    if clean_batch.shape != corrupted_batch.shape:
        raise ValueError("clean/corrupted batch shape mismatch")
    Y, Z = forward_batch(p, corrupted_batch)
    g = GradientSet.zeros(p)
    _, gr = _recon_term(p, corrupted_batch, clean_batch, Y, Z)
    g += gr
    _, gb = _binary_term(p, corrupted_batch, Y, cfg.alpha, cfg.epsilon,
                         _n_target(cfg, clean_batch.shape[1]))
    g += gb
    return g


def cautobin_objective(p: NetworkParams, batch: np.ndarray, cfg: ObjectiveConfig,
                       lambda_c: float):
    """Contractive objective: adds lambda_c * ||d y / d x||_F^2 per point."""
    Y, Z = forward_batch(p, batch)
    recon, _ = _recon_term(p, batch, batch, Y, Z)
    contract, _ = _contractive_term(p, batch, Y, lambda_c)
    binary, _ = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon,
                             _n_target(cfg, batch.shape[1]))
    parts = ObjectiveParts(recon=recon, jacobian=contract, binary=binary)
    return parts.total, parts


def cautobin_gradients(p: NetworkParams, batch: np.ndarray, cfg: ObjectiveConfig,
                       lambda_c: float) -> GradientSet:
    Y, Z = forward_batch(p, batch)
    g = GradientSet.zeros(p)
    _, gr = _recon_term(p, batch, batch, Y, Z)
    g += gr
    _, gc = _contractive_term(p, batch, Y, lambda_c)
    g += gc
    _, gb = _binary_term(p, batch, Y, cfg.alpha, cfg.epsilon,
                         _n_target(cfg, batch.shape[1]))
    g += gb
    return g


def lsh_generate(D: int, d: int, seed: int, scale: float = 1.0) -> NetworkParams:
    """Random-projection baseline: W1 i.i.d. standard normal, no training."""
    if d < 1:
        raise ValueError("d must be >= 1")
    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((d, D))
    return NetworkParams(w1=w1, w2=np.zeros((D, d)), b1=np.zeros(d),
                         b2=np.zeros(D), scale=scale)
