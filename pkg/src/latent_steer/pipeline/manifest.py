"""JSON-lines image manifests with ancestor-count proxy labels.

One object per line::

    {"image_id": "a1", "path": "img/a1.png", "ancestor_count": 153,
     "user_id": "u7", "width": 512, "height": 512,
     "latent_path": "lat/a1.npy", "alpha": 0.1}

``latent_path`` and ``alpha`` are optional. Relative paths resolve against
the manifest's directory.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..toy.proxy import CREATIVE, NON_CREATIVE, UNLABELED, proxy_label

log = logging.getLogger(__name__)

REQUIRED = ("image_id", "path", "ancestor_count", "user_id", "width", "height")


class ManifestError(ValueError):
    pass


@dataclass
class ManifestRecord:
    image_id: str
    path: str
    ancestor_count: int
    user_id: str
    width: int
    height: int
    latent_path: str | None = None
    alpha: float | None = None
    label: str = UNLABELED
    line: int = 0
    resolved: Path | None = field(default=None, repr=False)
    missing: bool = False

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in REQUIRED}
        if self.latent_path is not None:
            d["latent_path"] = self.latent_path
        if self.alpha is not None:
            d["alpha"] = self.alpha
        return d


@dataclass
class Manifest:
    records: list[ManifestRecord]
    errors: list[tuple[int, str]]
    root: Path

    def labelled(self) -> list[ManifestRecord]:
        return [r for r in self.records if r.label in (CREATIVE, NON_CREATIVE)]

    def counts(self) -> Counter:
        return Counter(r.label for r in self.records)


def _parse(obj, lineno: int) -> ManifestRecord:
    if not isinstance(obj, dict):
        raise ManifestError("record is not a JSON object")
    missing = [k for k in REQUIRED if k not in obj]
    if missing:
        raise ManifestError(f"missing field(s) {', '.join(missing)}")
    count = obj["ancestor_count"]
    if isinstance(count, bool) or not isinstance(count, int) or count < 0:
        raise ManifestError("ancestor_count must be a non-negative integer")
    for k in ("width", "height"):
        if isinstance(obj[k], bool) or not isinstance(obj[k], int) or obj[k] < 1:
            raise ManifestError(f"{k} must be a positive integer")
    alpha = obj.get("alpha")
    if alpha is not None and not isinstance(alpha, (int, float)):
        raise ManifestError("alpha must be a number")
    return ManifestRecord(
        image_id=str(obj["image_id"]),
        path=str(obj["path"]),
        ancestor_count=count,
        user_id=str(obj["user_id"]),
        width=obj["width"],
        height=obj["height"],
        latent_path=obj.get("latent_path"),
        alpha=None if alpha is None else float(alpha),
        label=proxy_label(count),
        line=lineno,
    )


def ingest_manifest(path, strict: bool = False) -> Manifest:
    """Parse and label a manifest.

    Malformed lines are collected in ``errors`` as ``(line_number, message)``
    and skipped; with ``strict`` the first one raises :class:`ManifestError`.
    Unresolvable image paths are flagged via ``record.missing``.
    """
    path = Path(path)
    root = path.parent
    records: list[ManifestRecord] = []
    errors: list[tuple[int, str]] = []
    seen: set[str] = set()
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = _parse(json.loads(line), lineno)
                if rec.image_id in seen:
                    raise ManifestError(f"duplicate image_id {rec.image_id!r}")
            except (json.JSONDecodeError, ManifestError) as exc:
                msg = f"line {lineno}: {exc}"
                if strict:
                    raise ManifestError(msg) from None
                log.warning("%s: %s", path, msg)
                errors.append((lineno, str(exc)))
                continue
            seen.add(rec.image_id)
            p = Path(rec.path)
            rec.resolved = p if p.is_absolute() else root / p
            rec.missing = not rec.resolved.exists()
            records.append(rec)
    return Manifest(records, errors, root)


def write_manifest(path, records) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for r in records:
            d = r.to_json() if isinstance(r, ManifestRecord) else dict(r)
            fh.write(json.dumps(d, sort_keys=True) + "\n")
    return path


def load_latent(path) -> np.ndarray:
    """A latent vector from ``.npy`` or a text file of numbers."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path).astype(np.float64).reshape(-1)
    return np.array(path.read_text().replace(",", " ").split(), dtype=np.float64)


def read_latent_csv(path):
    """CSV with an ``id`` column, optional ``user_id`` column, then values.

    Returns ``(ids, users_or_None, matrix)``.
    """
    from ..io import read_csv

    header, rows = read_csv(path)
    if not header or header[0] != "id":
        raise ValueError(f"{path}: first column must be 'id'")
    has_user = len(header) > 1 and header[1] == "user_id"
    start = 2 if has_user else 1
    ids = [r[0] for r in rows]
    users = [r[1] for r in rows] if has_user else None
    X = np.array([[float(v) for v in r[start:]] for r in rows], dtype=np.float64)
    return ids, users, X


def record_dict(rec: ManifestRecord) -> dict:
    d = asdict(rec)
    d["resolved"] = str(rec.resolved) if rec.resolved else None
    return d
