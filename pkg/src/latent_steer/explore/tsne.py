"""Exact O(n^2) t-SNE."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

log = logging.getLogger(__name__)

P_FLOOR = 1e-12
LOG_BETA_RANGE = (-50.0, 50.0)


@dataclass
class EmbeddingConfig:
    pca_dims: int = 50
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    min_gain: float = 0.01
    init_std: float = 1e-2     # N(0, 1e-4) per coordinate
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def sq_distances(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    sq = np.sum(X * X, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _row_probs(d2, beta):
    # shift by the minimum so that exp never underflows to all zeros
    e = np.exp(-(d2 - d2.min()) * beta)
    p = e / e.sum()
    nz = p > 0
    h = -np.sum(p[nz] * np.log2(p[nz]))
    return p, h


@dataclass
class Calibration:
    beta: float
    probs: np.ndarray
    entropy: float
    converged: bool

    @property
    def sigma(self) -> float:
        return float(np.sqrt(1.0 / (2.0 * self.beta)))


def perplexity_calibration(distances, perplexity: float, tol: float = 1e-5,
                           max_iter: int = 50) -> Calibration:
    """Bisect the Gaussian precision so the row entropy is log2(perplexity).

    ``distances`` are squared distances to the other points (self excluded).
    Bisection runs on log-precision; on non-convergence the closest boundary
    found is returned with ``converged=False``.
    """
    if perplexity < 1:
        raise ValueError("perplexity must be at least 1")
    d2 = np.asarray(distances, dtype=np.float64)
    target = np.log2(perplexity)
    if d2.size == 0:
        raise ValueError("need at least one neighbour")
    if np.ptp(d2) == 0:
        p = np.full(d2.size, 1.0 / d2.size)
        h = float(np.log2(d2.size))
        return Calibration(1.0, p, h, abs(h - target) <= tol)
    lo, hi = LOG_BETA_RANGE
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        p, h = _row_probs(d2, np.exp(mid))
        if best is None or abs(h - target) < abs(best[2] - target):
            best = (np.exp(mid), p, h)
        if abs(h - target) <= tol:
            return Calibration(float(np.exp(mid)), p, float(h), True)
        # entropy falls as precision rises
        if h > target:
            lo = mid
        else:
            hi = mid
    return Calibration(float(best[0]), best[1], float(best[2]), False)


def conditional_p(X=None, perplexity: float = 30.0, d2=None, tol: float = 1e-5):
    """Row-stochastic P_{j|i} (zero diagonal), per-row betas, failed row indices."""
    if d2 is None:
        d2 = sq_distances(X)
    n = d2.shape[0]
    P = np.zeros((n, n))
    betas = np.empty(n)
    failed = []
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        cal = perplexity_calibration(d2[i, others], perplexity, tol)
        P[i, others] = cal.probs
        betas[i] = cal.beta
        if not cal.converged:
            failed.append(i)
    if failed:
        log.warning("perplexity calibration did not converge for rows %s", failed[:10])
    return P, betas, failed


def joint_p(P_cond) -> np.ndarray:
    n = P_cond.shape[0]
    P = (P_cond + P_cond.T) / (2.0 * n)
    P = np.maximum(P, P_FLOOR)
    np.fill_diagonal(P, 0.0)
    return P / P.sum()


def kl_divergence(P, Q) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def _q(Y):
    num = 1.0 / (1.0 + sq_distances(Y))
    np.fill_diagonal(num, 0.0)
    Q = np.maximum(num / num.sum(), P_FLOOR)
    return Q, num


class EmbeddingDiverged(RuntimeError):
    def __init__(self, msg, kl_trace):
        super().__init__(msg)
        self.kl_trace = kl_trace


@dataclass
class TSNEResult:
    embedding: np.ndarray
    kl_trace: np.ndarray
    P: np.ndarray = field(repr=False)
    failed_rows: list = field(default_factory=list)


def tsne_embed(X=None, config: EmbeddingConfig | None = None, P=None, index=None,
               _ids=None) -> TSNEResult:
    """Embed rows of ``X`` (or a precomputed joint ``P``) in 2-D.

    ``index`` assigns each row its position in the seeded initial layout;
    passing the original row ids keeps the result tied to points rather than
    to their order.
    """
    cfg = config or EmbeddingConfig()
    if index is not None:
        # run in canonical id order so results follow points, not row order
        index = np.asarray(index)
        order = np.argsort(index, kind="stable")
        res = tsne_embed(
            None if X is None else np.asarray(X)[order], cfg,
            None if P is None else np.asarray(P)[np.ix_(order, order)],
            _ids=index[order],
        )
        emb = np.empty_like(res.embedding)
        emb[order] = res.embedding
        Pb = np.empty_like(res.P)
        Pb[np.ix_(order, order)] = res.P
        return TSNEResult(emb, res.kl_trace, Pb, sorted(int(order[i]) for i in res.failed_rows))
    return _tsne(X, cfg, P, _ids)


def _tsne(X, cfg: EmbeddingConfig, P, ids) -> TSNEResult:
    failed = []
    if P is None:
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        if n < 4:
            raise ValueError("t-SNE needs at least 4 points")
        if not cfg.perplexity < (n - 1) / 3.0:
            raise ValueError(f"perplexity {cfg.perplexity} must be < (n-1)/3 = {(n - 1) / 3:.3g}")
        Pc, _, failed = conditional_p(X, cfg.perplexity)
        P = joint_p(Pc)
    else:
        P = np.asarray(P, dtype=np.float64)
        n = P.shape[0]
        if n < 4:
            raise ValueError("t-SNE needs at least 4 points")
    ids = np.arange(n) if ids is None else np.asarray(ids, dtype=np.int64)
    span = max(int(ids.max()) + 1, n)
    Y = np.random.default_rng(cfg.seed).normal(0.0, cfg.init_std, (span, 2))[ids].copy()
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        Q, num = _q(Y)
        exag = cfg.early_exaggeration if it < cfg.exaggeration_iters else 1.0
        W = (exag * P - Q) * num
        grad = 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y
        mom = cfg.momentum if it < cfg.momentum_switch else cfg.final_momentum
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, cfg.min_gain)
        update = mom * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
        kl[it] = kl_divergence(P, _q(Y)[0])
        if not np.all(np.isfinite(Y)):
            raise EmbeddingDiverged(f"embedding went non-finite at iteration {it}", kl[: it + 1])
    return TSNEResult(Y, kl, P, failed)
