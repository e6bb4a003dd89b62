"""User-coloured embedding export."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..io import write_csv
from ..plots import embedding_scatter

EMBEDDING_HEADER = ("x", "y", "user_id", "image_id")


@dataclass
class EmbeddingSelection:
    rows: np.ndarray        # indices into the embedding
    users: list[str]


def select_users(user_ids, min_count: int | None = 50, max_count: int | None = 100) -> EmbeddingSelection:
    """Keep images of users whose image count lies in [min_count, max_count]."""
    ids = [str(u) for u in user_ids]
    counts = Counter(ids)
    keep = {
        u for u, c in counts.items()
        if (min_count is None or c >= min_count) and (max_count is None or c <= max_count)
    }
    rows = np.array([i for i, u in enumerate(ids) if u in keep], dtype=np.int64)
    return EmbeddingSelection(rows, sorted(keep))


def embedding_report(embedding, user_ids, image_ids, out_dir, min_count: int | None = 50,
                     max_count: int | None = 100, stem: str = "embedding") -> EmbeddingSelection:
    """Write ``<stem>.csv`` and ``<stem>.svg`` for the retained users."""
    emb = np.asarray(embedding, dtype=np.float64)
    if len(user_ids) != emb.shape[0] or len(image_ids) != emb.shape[0]:
        raise ValueError("ids must align with embedding rows")
    sel = select_users(user_ids, min_count, max_count)
    if sel.rows.size == 0:
        raise ValueError("no users left after the image-count filter")
    out_dir = Path(out_dir)
    users = [str(user_ids[i]) for i in sel.rows]
    write_csv(
        out_dir / f"{stem}.csv", EMBEDDING_HEADER,
        ((emb[i, 0], emb[i, 1], str(user_ids[i]), str(image_ids[i])) for i in sel.rows),
    )
    embedding_scatter(out_dir / f"{stem}.svg", emb[sel.rows], users)
    return sel
