import numpy as np

from .pca import PCAResult, jacobi_eigh, pca_fit_transform
from .report import EMBEDDING_HEADER, EmbeddingSelection, embedding_report, select_users
from .tsne import (
    Calibration,
    EmbeddingConfig,
    EmbeddingDiverged,
    TSNEResult,
    conditional_p,
    joint_p,
    kl_divergence,
    perplexity_calibration,
    sq_distances,
    tsne_embed,
)


def explore_latents(X, config: EmbeddingConfig | None = None, index=None):
    """PCA down to ``pca_dims`` (when the data is wider) followed by t-SNE."""
    cfg = config or EmbeddingConfig()
    X = np.asarray(X, dtype=np.float64)
    k = min(cfg.pca_dims, X.shape[1], X.shape[0] - 1)
    pca = pca_fit_transform(X, k) if k < X.shape[1] else None
    reduced = pca.projected if pca is not None else X
    return pca, tsne_embed(reduced, cfg, index=index)


__all__ = [
    "PCAResult", "jacobi_eigh", "pca_fit_transform", "EMBEDDING_HEADER",
    "EmbeddingSelection", "embedding_report", "select_users", "Calibration",
    "EmbeddingConfig", "EmbeddingDiverged", "TSNEResult", "conditional_p", "joint_p",
    "kl_divergence", "perplexity_calibration", "sq_distances", "tsne_embed",
    "explore_latents",
]
