"""Training loop: PCA initialization, epoch shuffling into mini-batches,
steepest-descent updates with a strong-Wolfe line search, cost tracing.

One seeded RNG stream drives everything, consumed in a fixed order:
the init rotation first, then per epoch the shuffle permutation and
(for the denoising variant) the corruption draws.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import variants as var
from .network import (
    NetworkParams,
    ObjectiveConfig,
    ObjectiveParts,
    gradients,
    objective,
    pack_gradient,
    pack_params,
    unpack_params,
)


class LineSearchError(RuntimeError):
    """No finite objective value found along the search direction."""


@dataclass
class TrainConfig:
    bits: int
    alpha: float = 0.1
    epsilon: float = 1e-4
    epochs: int = 5
    batch_size: int = 1000
    total_iterations: int | None = None  # optional cap across epochs
    seed: int = 0
    method: var.VariantConfig = field(default_factory=var.VariantConfig)
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    wolfe_max_evals: int = 20

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.epochs < 0 or self.batch_size < 1 or self.bits < 1:
            raise ValueError("epochs, batch_size and bits must be positive")


@dataclass
class TraceRow:
    iteration: int
    total: float
    recon: float
    jacobian: float
    binary: float
    step: float
    evals: int
    fallback: bool


@dataclass
class TrainReport:
    cost_trace: list[TraceRow] = field(default_factory=list)
    epoch_costs: list[tuple[int, float]] = field(default_factory=list)
    wall_time: float = 0.0


def write_trace_csv(path, report: TrainReport) -> None:
    with open(path, "w") as f:
        f.write("iteration,total,recon,jacobian,binary,step,evals,fallback\n")
        for r in report.cost_trace:
            f.write(f"{r.iteration},{r.total!r},{r.recon!r},{r.jacobian!r},"
                    f"{r.binary!r},{r.step!r},{r.evals},{int(r.fallback)}\n")


def init_params(train: np.ndarray, d: int, seed) -> NetworkParams:
    """PCA projection times a random rotation; linear-optimal reconstruction.

    W1 = R P with P the top-d principal directions (rows), R a random
    d x d rotation; W2 = W1', b1 = -W1 mu, b2 = mu.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    D, N = train.shape
    if N <= d:
        raise ValueError(f"need more than d={d} training points, got {N}")
    mu = train.mean(axis=1)
    centered = train - mu[:, None]
    cov = centered @ centered.T / N
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if d > D or evals[min(d, D) - 1] <= 1e-12 * max(evals[0], 1e-300):
        warnings.warn("training data rank below bit count; PCA basis padded "
                      "with an orthonormal complement", stacklevel=2)
    P = evecs[:, :d].T  # (d, D); eigh guarantees orthonormal rows
    if d > D:
        raise ValueError(f"bits d={d} exceeds dimension D={D}")
    M = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(M)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, -1] = -Q[:, -1]
    w1 = Q @ P
    return NetworkParams(w1=w1, w2=w1.T.copy(), b1=-w1 @ mu, b2=mu.copy())


def wolfe_step(theta: np.ndarray, g: np.ndarray, f, c1: float = 1e-4,
               c2: float = 0.9, max_evals: int = 20, f0: float | None = None,
               initial_step: float = 1.0):
    """Strong-Wolfe step length along the steepest-descent direction -g.

    f maps a parameter vector to (value, gradient). Returns
    (step, evals, fallback); fallback means the budget ran out and the
    best sufficient-decrease step (or the smallest trial) was returned.
    """
    gg = float(g @ g)
    if gg == 0.0:
        return 0.0, 0, False
    evals = 0

    def phi(a):
        nonlocal evals
        evals += 1
        val, grad = f(theta - a * g)
        return float(val), float(-(grad @ g))

    if f0 is None:
        val0, _ = f(theta)
        phi0 = float(val0)
        evals += 1
    else:
        phi0 = float(f0)
    if not np.isfinite(phi0):
        raise LineSearchError("objective non-finite at the current point")
    derphi0 = -gg

    best_suff = None  # largest-decrease step satisfying sufficient decrease
    best_suff_val = np.inf
    smallest_trial = None

    def note(a, v):
        nonlocal best_suff, best_suff_val, smallest_trial
        if not np.isfinite(v):
            return
        if smallest_trial is None or a < smallest_trial:
            smallest_trial = a
        if v <= phi0 + c1 * a * derphi0 and v < best_suff_val:
            best_suff, best_suff_val = a, v

    def bail():
        if best_suff is not None:
            return best_suff, evals, True
        if smallest_trial is not None:
            return smallest_trial, evals, True
        raise LineSearchError("no finite objective value along -g")

    def zoom(lo, hi, phi_lo):
        nonlocal evals
        while evals < max_evals:
            a = 0.5 * (lo + hi)
            v, dv = phi(a)
            note(a, v)
            if not np.isfinite(v) or v > phi0 + c1 * a * derphi0 or v >= phi_lo:
                hi = a
            else:
                if abs(dv) <= -c2 * derphi0:
                    return a, evals, False
                if dv * (hi - lo) >= 0:
                    hi = lo
                lo, phi_lo = a, v
        return bail()

    a_prev, phi_prev = 0.0, phi0
    a = initial_step
    first = True
    while evals < max_evals:
        v, dv = phi(a)
        note(a, v)
        if not np.isfinite(v) or v > phi0 + c1 * a * derphi0 or (not first and v >= phi_prev):
            return zoom(a_prev, a, phi_prev)
        if abs(dv) <= -c2 * derphi0:
            return a, evals, False
        if dv >= 0:
            return zoom(a, a_prev, v)
        a_prev, phi_prev = a, v
        a *= 2.0
        first = False
    return bail()


def _batch_eval(p_template, cfg: TrainConfig, batch, projs, corrupted):
    """(objective closure over theta, parts function) for one mini-batch."""
    ocfg = ObjectiveConfig(alpha=cfg.method.alpha, epsilon=cfg.epsilon)
    kind = cfg.method.kind

    def parts_at(p) -> ObjectiveParts:
        if kind == "auto-jacobin":
            return objective(p, batch, projs, ocfg)[1]
        if kind == "autobin":
            return var.autobin_objective(p, batch, ocfg)[1]
        if kind == "dautobin":
            return var.dautobin_objective(p, batch, corrupted, ocfg)[1]
        if kind == "cautobin":
            return var.cautobin_objective(p, batch, ocfg, cfg.method.lambda_c)[1]
        raise ValueError(f"variant {kind!r} is not trained by gradient descent")

    def grad_at(p):
        if kind == "auto-jacobin":
            return gradients(p, batch, projs, ocfg)
        if kind == "autobin":
            return var.autobin_gradients(p, batch, ocfg)
        if kind == "dautobin":
            return var.dautobin_gradients(p, batch, corrupted, ocfg)
        if kind == "cautobin":
            return var.cautobin_gradients(p, batch, ocfg, cfg.method.lambda_c)
        raise ValueError(f"variant {kind!r} is not trained by gradient descent")

    def f(theta):
        p = unpack_params(theta, p_template)
        return parts_at(p).total, pack_gradient(grad_at(p))

    return f, parts_at, grad_at


def train(X_train: np.ndarray, tangents, cfg: TrainConfig):
    """Mini-batch steepest descent with Wolfe steps; returns (params, report).

    tangents is a list of D x D projectors per training point (may be
    None for variants without the Jacobian term). Data must already be
    normalized; the caller sets params.scale afterwards.
    """
    t_start = time.perf_counter()
    D, N = X_train.shape
    if cfg.batch_size > N:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds N={N}")
    if cfg.method.needs_tangents:
        if tangents is None or len(tangents) != N:
            raise ValueError("auto-jacobin needs one tangent projector per point")
    rng = np.random.default_rng(cfg.seed)
    params = init_params(X_train, cfg.bits, rng)
    report = TrainReport()

    projs = np.stack(tangents) if cfg.method.needs_tangents else None
    m = N // cfg.batch_size  # trailing remainder joins the last batch
    bounds = [cfg.batch_size * j for j in range(m)] + [N]

    iteration = 0
    stop = False
    prev_step = 1.0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(N)
        Xs = X_train[:, perm]
        projs_s = projs[perm] if projs is not None else None
        if cfg.method.kind == "dautobin":
            Xc = var.corrupt_mask(Xs, cfg.method.corruption_t, rng)
        else:
            Xc = None
        for j in range(m):
            lo, hi = bounds[j], bounds[j + 1]
            batch = Xs[:, lo:hi]
            bprojs = projs_s[lo:hi] if projs_s is not None else None
            bcorr = Xc[:, lo:hi] if Xc is not None else None
            f, parts_at, grad_at = _batch_eval(params, cfg, batch, bprojs, bcorr)

            parts = parts_at(params)
            theta = pack_params(params)
            g = pack_gradient(grad_at(params))

            step, evals, fallback = 0.0, 0, False
            # warm-start the trial step from the last accepted one; the
            # bracketing phase doubles upward, so recovery is cheap
            init_step, err = min(max(2.0 * prev_step, 1e-12), 1.0), None
            for _ in range(4):  # retry with halved initial step on failure
                try:
                    step, evals, fallback = wolfe_step(
                        theta, g, f, cfg.wolfe_c1, cfg.wolfe_c2,
                        cfg.wolfe_max_evals, f0=parts.total,
                        initial_step=init_step)
                    err = None
                    break
                except LineSearchError as e:
                    err = e
                    init_step *= 0.5
            if err is not None:
                raise err
            if step > 0.0:
                prev_step = step

            params = unpack_params(theta - step * g, params)
            iteration += 1
            report.cost_trace.append(TraceRow(
                iteration=iteration, total=parts.total, recon=parts.recon,
                jacobian=parts.jacobian, binary=parts.binary,
                step=step, evals=evals, fallback=fallback))
            if cfg.total_iterations is not None and iteration >= cfg.total_iterations:
                stop = True
                break
        # full-set cost once per epoch, for convergence plots
        f_full, parts_full, _ = _batch_eval(
            params, cfg, Xs, projs_s, Xc)
        report.epoch_costs.append((epoch + 1, parts_full(params).total))
        if stop:
            break

    report.wall_time = time.perf_counter() - t_start
    return params, report
