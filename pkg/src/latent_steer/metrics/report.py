"""Per-alpha aggregation of image metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import METRIC_NAMES, all_metrics


@dataclass
class MetricRow:
    alpha: float
    metric: str
    mean: float
    std: float
    n_missing: int
    n: int


@dataclass
class MetricTable:
    rows: list[MetricRow] = field(default_factory=list)

    def get(self, alpha: float, metric: str) -> MetricRow:
        for r in self.rows:
            if r.alpha == alpha and r.metric == metric:
                return r
        raise KeyError((alpha, metric))

    def alphas(self) -> list[float]:
        return sorted({r.alpha for r in self.rows})

    def metrics(self) -> list[str]:
        seen = []
        for r in self.rows:
            if r.metric not in seen:
                seen.append(r.metric)
        return seen

    def series(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        al = self.alphas()
        return np.array(al), np.array([self.get(a, metric).mean for a in al])


def summarize(values, alpha: float, metric: str) -> MetricRow:
    """Mean/std over finite values; NaNs count as missing and are excluded."""
    v = np.asarray(values, dtype=np.float64)
    ok = np.isfinite(v)
    kept = v[ok]
    mean = float(kept.mean()) if kept.size else float("nan")
    std = float(kept.std()) if kept.size else float("nan")
    return MetricRow(float(alpha), metric, mean, std, int((~ok).sum()), int(v.size))


def metric_values(images, masks=None, **kw) -> dict[str, np.ndarray]:
    """Evaluate every metric on each image; returns metric -> per-image array."""
    out = {m: [] for m in METRIC_NAMES}
    for i, img in enumerate(images):
        mask = None if masks is None else masks[i]
        for k, v in all_metrics(img, mask, **kw).items():
            out[k].append(v)
    return {k: np.asarray(v, dtype=np.float64) for k, v in out.items()}


def metric_report(groups: dict[float, "np.ndarray | list"], masks=None, **kw) -> MetricTable:
    """``groups`` maps alpha -> images; ``masks`` optionally maps alpha -> masks."""
    table = MetricTable()
    for alpha in sorted(groups):
        imgs = groups[alpha]
        if len(imgs) == 0:
            raise ValueError(f"empty image group at alpha={alpha}")
        vals = metric_values(imgs, None if masks is None else masks[alpha], **kw)
        for name in METRIC_NAMES:
            table.rows.append(summarize(vals[name], alpha, name))
    return table
