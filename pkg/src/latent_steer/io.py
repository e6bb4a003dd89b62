"""File formats: CSV tables, PNG/PPM images, PNG/PGM masks."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from PIL import Image

SWEEP_HEADER = ("alpha", "metric", "mean", "std", "n_missing")


def fmt(x) -> str:
    """Round-trip-exact text for numbers (17 significant digits)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        return "%.17g" % x
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def write_metric_table(path, table) -> Path:
    return write_csv(
        path, SWEEP_HEADER,
        ((r.alpha, r.metric, r.mean, r.std, r.n_missing) for r in table.rows),
    )


def read_metric_table(path):
    from .metrics import MetricRow, MetricTable

    header, rows = read_csv(path)
    if tuple(header) != SWEEP_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    table = MetricTable()
    for r in rows:
        table.rows.append(MetricRow(float(r[0]), r[1], float(r[2]), float(r[3]), int(r[4]), -1))
    return table


def to_uint8(image) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_image(path, image) -> Path:
    """Write an H x W x 3 image in [0, 1] as 8-bit PNG or binary PPM (by suffix)."""
    path = Path(path)
    fmt_name = {".png": "PNG", ".ppm": "PPM"}.get(path.suffix.lower())
    if fmt_name is None:
        raise ValueError(f"unsupported image suffix {path.suffix!r}")
    Image.fromarray(to_uint8(image), "RGB").save(path, fmt_name)
    return path


def load_image(path) -> np.ndarray:
    """Read PNG or PPM (P6) into float64 H x W x 3 in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def load_mask(path) -> np.ndarray:
    """Read an 8-bit greyscale PNG/PGM; nonzero pixels are object."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return arr > 0


def save_mask(path, grid) -> Path:
    path = Path(path)
    fmt_name = {".png": "PNG", ".pgm": "PPM"}.get(path.suffix.lower())
    if fmt_name is None:
        raise ValueError(f"unsupported mask suffix {path.suffix!r}")
    Image.fromarray(np.where(np.asarray(grid, dtype=bool), 255, 0).astype(np.uint8), "L").save(path, fmt_name)
    return path


def resize_image(image, side: int = 512) -> np.ndarray:
    """Bilinear resize to side x side (the crawled images were normalised to 512)."""
    im = Image.fromarray(to_uint8(image), "RGB").resize((side, side), Image.BILINEAR)
    return np.asarray(im, dtype=np.float64) / 255.0
