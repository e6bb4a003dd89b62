"""Alpha sweeps: score and image-metric curves over a fixed latent set."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..metrics import METRIC_NAMES, MetricRow, MetricTable, metric_values, summarize
from .models import DirectionModel

DEFAULT_GRID = tuple(round(a / 10, 1) for a in range(-5, 6))


@dataclass
class SweepReport:
    alphas: np.ndarray
    score_mean: np.ndarray
    score_std: np.ndarray
    table: MetricTable
    scores: np.ndarray                      # (n_alpha, n_samples)
    samples: dict = field(default_factory=dict)   # alpha -> (k, H, W, 3)

    @property
    def spread(self) -> float:
        """Mean score at the largest alpha minus the smallest."""
        return float(self.score_mean[-1] - self.score_mean[0])

    def rows(self) -> list[MetricRow]:
        return self.table.rows


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LATENT_STEER_THREADS", "1")))
    except ValueError:
        return 1


def alpha_sweep(model: DirectionModel, zs, ys, A, G, alphas=DEFAULT_GRID, metrics: bool = True,
                eps_seed: int = 0, eps_z=None, eps_y=None, chunk: int = 250,
                n_samples: int = 0, segment: dict | None = None,
                threads: int | None = None) -> SweepReport:
    """Evaluate ``model`` on every (z, alpha) cell.

    Noise is drawn once per sample and reused across the grid, so curves vary
    only with alpha. ``segment`` is passed to the metric segmenter
    (``threshold``, ``mode``).
    """
    zs = np.asarray(zs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if zs.ndim != 2 or zs.shape[0] == 0:
        raise ValueError("alpha_sweep needs a non-empty (n, d_z) latent set")
    if ys.shape[0] != zs.shape[0]:
        raise ValueError("latent and class sets differ in length")
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size == 0 or np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha grid must be non-empty and strictly ascending")
    n = zs.shape[0]
    rng = np.random.default_rng(eps_seed)
    if eps_z is None and model.z_noise_dim:
        eps_z = rng.standard_normal((n, model.z_noise_dim))
    if eps_y is None and model.y_noise_dim:
        eps_y = rng.standard_normal((n, model.y_noise_dim))
    seg = dict(segment or {})

    def cell(alpha):
        scores = np.empty(n)
        vals = {m: np.empty(n) for m in METRIC_NAMES} if metrics else {}
        keep = None
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            z2, y2 = model.transform(
                zs[lo:hi], ys[lo:hi], np.full(hi - lo, alpha),
                None if eps_z is None else eps_z[lo:hi],
                None if eps_y is None else eps_y[lo:hi],
            )
            imgs = G(z2, y2).data
            scores[lo:hi] = A(imgs)
            if metrics:
                for k, v in metric_values(imgs, **seg).items():
                    vals[k][lo:hi] = v
            if lo == 0 and n_samples:
                keep = imgs[:n_samples].copy()
        return scores, vals, keep

    workers = threads if threads is not None else thread_count()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(cell, alphas))
    else:
        results = [cell(a) for a in alphas]

    scores = np.stack([r[0] for r in results])
    table = MetricTable()
    samples = {}
    for i, alpha in enumerate(alphas):
        a = float(alpha)
        table.rows.append(summarize(scores[i], a, "score"))
        if metrics:
            vals = results[i][1]
            for m in METRIC_NAMES:
                table.rows.append(summarize(vals[m], a, m))
        if results[i][2] is not None:
            samples[a] = results[i][2]
    if metrics and 0.0 in alphas:
        # per-latent change in mask area relative to the unmodified image
        base = results[int(np.flatnonzero(alphas == 0.0)[0])][1]["object_size"]
        for i, alpha in enumerate(alphas):
            table.rows.append(summarize(results[i][1]["object_size"] - base, float(alpha), "object_size_delta"))
    return SweepReport(alphas, scores.mean(axis=1), scores.std(axis=1), table, scores, samples)
