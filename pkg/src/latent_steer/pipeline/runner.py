"""Mode dispatch and output-directory bookkeeping.

A run owns its output directory through a lockfile. Every file a run writes
is tracked; if the run fails, those files are renamed with a ``.partial``
suffix and the exit code is nonzero.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import plots
from ..checks import gradcheck_suite
from ..directions import (
    DirectionModel,
    TrainingDiverged,
    alpha_sweep,
    build_model,
    load_model,
    save_model,
    smoothed,
    train_direction,
)
from ..explore import embedding_report, explore_latents
from ..io import load_image, read_csv, read_metric_table, save_image, write_csv, write_metric_table
from ..metrics import METRIC_NAMES, SEVEN, all_metrics, metric_report
from ..toy import (
    ProxyExample,
    ToyGenerator,
    make_assessor,
    shuffle_labels,
    synth_proxy_dataset,
    train_assessor_classifier,
)
from .config import RunConfig
from .manifest import ManifestError, ingest_manifest, load_latent, read_latent_csv, write_manifest

log = logging.getLogger(__name__)

LOCKFILE = ".lock"
SCORE_HEADER = ("alpha", "mean", "std")
COMPARE_HEADER = ("alpha", "mean_a", "mean_b", "delta")
SUMMARY_HEADER = ("statistic", "a", "b", "delta")


class RunError(RuntimeError):
    pass


class RunLocked(RunError):
    pass


class GridMismatch(RunError):
    pass


@dataclass
class RunResult:
    mode: str
    out: Path
    exit_code: int
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    error: str | None = None


class OutputDir:
    """Exclusive, tracked access to a run directory."""

    def __init__(self, path):
        self.path = Path(path)
        self.files: list[Path] = []
        self._lock = self.path / LOCKFILE

    def __enter__(self):
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self._lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RunLocked(f"{self.path} is locked by another run ({self._lock})") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        return self

    def __exit__(self, *exc):
        self._lock.unlink(missing_ok=True)
        return False

    def file(self, name) -> Path:
        p = self.path / name
        p.parent.mkdir(parents=True, exist_ok=True)
        # a stale .partial from an earlier failure is superseded
        p.with_name(p.name + ".partial").unlink(missing_ok=True)
        if p not in self.files:
            self.files.append(p)
        return p

    def track(self, paths):
        for p in paths:
            if p not in self.files:
                self.files.append(p)
        return paths

    def mark_partial(self) -> list[Path]:
        out = []
        for p in self.files:
            if p.exists():
                q = p.with_name(p.name + ".partial")
                p.replace(q)
                out.append(q)
        self.files = out
        return out


def _write_json(path, obj) -> Path:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return Path(path)


def _latent_set(cfg: RunConfig, d_z: int):
    """The sweep's fixed latent/class set, a pure function of (seed, n, d_z)."""
    rng = np.random.default_rng([cfg.seed, 1])
    n = cfg.sweep.n_latents
    zs = rng.standard_normal((n, d_z))
    if cfg.train.truncation is not None:
        zs = np.clip(zs, -cfg.train.truncation, cfg.train.truncation)
    ys = np.eye(cfg.generator.n_classes)[rng.integers(0, cfg.generator.n_classes, n)]
    return zs, ys


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


# ---- modes ---------------------------------------------------------------

def run_train(cfg: RunConfig, out: OutputDir) -> dict:
    G = ToyGenerator(cfg.generator)
    A = make_assessor(cfg.assessor.name, **cfg.assessor.params)
    try:
        res = train_direction(cfg.train, G, A)
        losses, model, failure = res.losses, res.model, None
    except TrainingDiverged as exc:
        losses, failure = exc.losses, exc
        model = build_model(cfg.train)
        model.set_params(exc.checkpoint)
    save_model(out.file("model.lsdm"), model, cfg.to_dict())
    out.file("model.json")
    sm = smoothed(losses)
    write_csv(out.file("losses.csv"), ("iteration", "loss", "smoothed"),
              zip(range(1, len(losses) + 1), losses, sm))
    if len(losses):
        plots.loss_curve(out.file("loss.svg"), losses, sm)
    if failure is not None:
        raise RunError(str(failure))
    w = min(250, max(1, len(losses) // 4))
    return {"initial_loss_mean": float(losses[:w].mean()), "final_loss_mean": float(losses[-w:].mean())}


def sweep_model(cfg: RunConfig, out_path: Path) -> DirectionModel:
    choice = cfg.sweep.model
    if choice == "zero":
        return DirectionModel.build("noise", cfg.train.d_z, cfg.generator.n_classes, cfg.train.hidden,
                                    cfg.train.noise_dim, output_init="zeros")
    path = Path(choice) if choice else out_path / "model.lsdm"
    if not path.exists():
        raise RunError(f"no model at {path}; run 'train' first or set sweep.model")
    return load_model(path)


def run_sweep(cfg: RunConfig, out: OutputDir) -> dict:
    G = ToyGenerator(cfg.generator)
    A = make_assessor(cfg.assessor.name, **cfg.assessor.params)
    model = sweep_model(cfg, out.path)
    zs, ys = _latent_set(cfg, model.d_z)
    rep = alpha_sweep(model, zs, ys, A, G, cfg.sweep.alphas, metrics=cfg.sweep.metrics,
                      eps_seed=cfg.seed, chunk=cfg.sweep.chunk, n_samples=cfg.sweep.n_samples,
                      segment=cfg.sweep.segment)
    write_metric_table(out.file("sweep.csv"), rep.table)
    write_csv(out.file("scores.csv"), SCORE_HEADER, zip(rep.alphas, rep.score_mean, rep.score_std))
    names = ["score"] + ([m for m in SEVEN] + ["object_size_delta"] if cfg.sweep.metrics else [])
    names = [m for m in names if m in rep.table.metrics()]
    out.track(plots.sweep_panels(out.path, {cfg.sweep.model or "model": rep.table}, names))
    for a, imgs in rep.samples.items():
        for i, img in enumerate(imgs):
            save_image(out.file(f"samples/alpha{a:+.2f}_{i:03d}.png"), img)
    meta = {
        "alphas": [float(a) for a in rep.alphas],
        "n_latents": int(zs.shape[0]),
        "latent_digest": _digest(zs, ys),
        "model_kind": model.kind,
        "spread": rep.spread,
    }
    _write_json(out.file("sweep_meta.json"), meta)
    return meta


def run_metrics(cfg: RunConfig, out: OutputDir, strict: bool = False) -> dict:
    if not cfg.metrics.manifest:
        raise RunError("metrics mode needs metrics.manifest")
    man = ingest_manifest(cfg.metrics.manifest, strict=strict)
    missing = [r for r in man.records if r.missing]
    if missing and strict:
        raise ManifestError(f"line {missing[0].line}: missing image {missing[0].resolved}")
    rows, groups = [], {}
    for r in man.records:
        if r.missing:
            continue
        img = load_image(r.resolved)
        m = all_metrics(img, threshold=cfg.metrics.threshold, mode=cfg.metrics.mode)
        rows.append((r.image_id, r.user_id, r.ancestor_count, r.label, *(m[k] for k in METRIC_NAMES)))
        if r.alpha is not None:
            groups.setdefault(r.alpha, []).append(img)
    write_csv(out.file("metrics.csv"), ("image_id", "user_id", "ancestor_count", "label", *METRIC_NAMES), rows)
    if groups:
        table = metric_report(groups, threshold=cfg.metrics.threshold, mode=cfg.metrics.mode)
        write_metric_table(out.file("sweep.csv"), table)
        out.track(plots.sweep_panels(out.path, {"images": table}, list(SEVEN)))
    return {"n_images": len(rows), "n_missing": len(missing), "n_malformed": len(man.errors)}


def synth_user_latents(n: int, d: int, n_users: int, spread: float, seed: int):
    """Latents where each synthetic user draws around a personal style centre."""
    rng = np.random.default_rng([seed, 2])
    centres = rng.standard_normal((n_users, d)) * spread
    users = rng.integers(0, n_users, n)
    X = centres[users] + rng.standard_normal((n, d))
    return [f"img{i:05d}" for i in range(n)], [f"user{u:02d}" for u in users], X


def _embed_inputs(cfg: RunConfig, strict: bool):
    e = cfg.embed
    if e.source == "synth":
        return synth_user_latents(e.n, e.d, e.n_users, e.user_spread, cfg.seed)
    if not e.path:
        raise RunError(f"embed.source={e.source!r} needs embed.path")
    if e.source == "csv":
        ids, users, X = read_latent_csv(e.path)
        return ids, users or ["all"] * len(ids), X
    if e.source == "manifest":
        man = ingest_manifest(e.path, strict=strict)
        recs = [r for r in man.records if r.latent_path]
        if not recs:
            raise RunError("no manifest records carry latent_path")
        X = np.stack([load_latent(man.root / r.latent_path) for r in recs])
        return [r.image_id for r in recs], [r.user_id for r in recs], X
    raise RunError(f"unknown embed.source {e.source!r}")


def run_embed(cfg: RunConfig, out: OutputDir, strict: bool = False) -> dict:
    ids, users, X = _embed_inputs(cfg, strict)
    tcfg = cfg.tsne
    pca, res = explore_latents(X, tcfg, index=np.arange(len(ids)))
    sel = embedding_report(res.embedding, users, ids, out.path, cfg.embed.min_count, cfg.embed.max_count)
    out.track([out.path / "embedding.csv", out.path / "embedding.svg"])
    write_csv(out.file("kl.csv"), ("iteration", "kl"), zip(range(1, len(res.kl_trace) + 1), res.kl_trace))
    plots.kl_curve(out.file("kl.svg"), res.kl_trace)
    if pca is not None:
        write_csv(out.file("pca.csv"), ("component", "variance"), enumerate(pca.explained_variance, start=1))
    return {"n_points": len(ids), "n_kept": int(sel.rows.size), "users": sel.users,
            "final_kl": float(res.kl_trace[-1]), "failed_rows": list(res.failed_rows)}


def _manifest_dataset(path, strict: bool) -> list[ProxyExample]:
    man = ingest_manifest(path, strict=strict)
    out = []
    for r in man.labelled():
        if r.missing:
            if strict:
                raise ManifestError(f"line {r.line}: missing image {r.resolved}")
            continue
        out.append(ProxyExample(load_image(r.resolved), r.ancestor_count, r.label, "manifest", r.user_id))
    return out


def run_assessor(cfg: RunConfig, out: OutputDir, strict: bool = False) -> dict:
    c = cfg.classifier
    data = _manifest_dataset(c.manifest, strict) if c.manifest else synth_proxy_dataset(c.n, cfg.seed)
    kw = dict(features=c.features, hidden=c.hidden, iterations=c.iterations, lr=c.lr,
              seed=cfg.seed, val_fraction=c.val_fraction)
    clf, rep = train_assessor_classifier(data, cfg.seed, **kw)
    _, ctrl = train_assessor_classifier(shuffle_labels(data, cfg.seed), cfg.seed, **kw)
    clf.save(out.file("classifier.npz"))
    stats = {
        "train_accuracy": rep.train_accuracy,
        "val_accuracy": rep.val_accuracy,
        "shuffled_val_accuracy": ctrl.val_accuracy,
        "n_train": rep.n_train,
        "n_val": rep.n_val,
    }
    write_csv(out.file("assessor.csv"), ("statistic", "value"), stats.items())
    write_csv(out.file("assessor_losses.csv"), ("iteration", "loss"),
              zip(range(1, len(rep.losses) + 1), rep.losses))
    plots.loss_curve(out.file("assessor_loss.svg"), rep.losses)
    return stats


def run_synth(cfg: RunConfig, out: OutputDir) -> dict:
    data = synth_proxy_dataset(cfg.synth.n, cfg.seed, cfg.synth.side)
    records, lat_rows = [], []
    for i, ex in enumerate(data):
        iid = f"img{i:05d}"
        save_image(out.file(f"images/{iid}.png"), ex.image)
        h, w, _ = ex.image.shape
        records.append({"image_id": iid, "path": f"images/{iid}.png", "ancestor_count": ex.ancestor_count,
                        "user_id": ex.user_id, "width": w, "height": h})
        lat_rows.append((iid, ex.user_id, *ex.latent))
    write_manifest(out.file("manifest.jsonl"), records)
    d = len(data[0].latent)
    write_csv(out.file("latents.csv"), ("id", "user_id", *(f"z{j}" for j in range(d))), lat_rows)
    counts = {}
    for ex in data:
        counts[ex.label] = counts.get(ex.label, 0) + 1
    return {"n": len(data), "labels": counts}


def run_gradcheck(cfg: RunConfig, out: OutputDir) -> dict:
    g = cfg.gradcheck
    res = gradcheck_suite(g.compositions, tuple(g.dims), g.step)
    write_csv(out.file("gradcheck.csv"), ("check", "error", "tolerance", "passed"),
              ((r.name, r.error, r.tolerance, r.passed) for r in res))
    failed = [r.name for r in res if not r.passed]
    if failed:
        raise RunError(f"{len(failed)} gradient check(s) failed: {', '.join(failed)}")
    return {"n_checks": len(res), "max_error": max(r.error for r in res)}


# ---- comparison ----------------------------------------------------------

def _load_run(path):
    path = Path(path)
    table = read_metric_table(path / "sweep.csv")
    meta_path = path / "sweep_meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return table, meta


def compare_runs(run_a, run_b, out_dir, labels=("a", "b")) -> list[Path]:
    """Per-alpha score deltas (b minus a), spread statistics and overlay plots.

    Raises :class:`GridMismatch` before writing anything when the two runs were
    evaluated on different alpha grids or latent sets.
    """
    ta, ma = _load_run(run_a)
    tb, mb = _load_run(run_b)
    ga, gb = ta.alphas(), tb.alphas()
    if ga != gb:
        raise GridMismatch(f"alpha grids differ: {len(ga)} points vs {len(gb)} points")
    da, db = ma.get("latent_digest"), mb.get("latent_digest")
    if da and db and da != db:
        raise GridMismatch("runs were evaluated on different latent sets")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    xa, ya = ta.series("score")
    _, yb = tb.series("score")
    files = [write_csv(out_dir / "comparison.csv", COMPARE_HEADER, zip(xa, ya, yb, yb - ya))]
    stats = {
        "spread": (ya[-1] - ya[0], yb[-1] - yb[0]),
        "min_mean": (ya.min(), yb.min()),
        "max_mean": (ya.max(), yb.max()),
        "mean_abs_delta": (0.0, float(np.abs(yb - ya).mean())),
    }
    files.append(write_csv(out_dir / "comparison_summary.csv", SUMMARY_HEADER,
                           ((k, a, b, b - a) for k, (a, b) in stats.items())))
    shared = [m for m in ta.metrics() if m in tb.metrics()]
    files += plots.sweep_panels(out_dir, {labels[0]: ta, labels[1]: tb}, shared, prefix="compare")
    return files


def run_compare(cfg: RunConfig, out: OutputDir) -> dict:
    c = cfg.compare
    if not (c.run_a and c.run_b):
        raise RunError("compare mode needs compare.run_a and compare.run_b")
    files = compare_runs(c.run_a, c.run_b, out.path, (c.label_a, c.label_b))
    out.track(files)
    _, rows = read_csv(out.path / "comparison_summary.csv")
    return {r[0]: float(r[3]) for r in rows}


MODE_FUNCS = {
    "train": run_train,
    "sweep": run_sweep,
    "metrics": run_metrics,
    "embed": run_embed,
    "assessor": run_assessor,
    "synth": run_synth,
    "gradcheck": run_gradcheck,
    "compare": run_compare,
}
_TAKES_STRICT = {"metrics", "embed", "assessor"}


def run(cfg: RunConfig, strict: bool = False) -> RunResult:
    """Execute ``cfg.mode`` into ``cfg.out``; never raises for mode failures."""
    out_path = Path(cfg.out)
    try:
        lock = OutputDir(out_path).__enter__()
    except RunLocked as exc:
        log.error("%s", exc)
        return RunResult(cfg.mode, out_path, 3, error=str(exc))
    try:
        _write_json(lock.file(f"config.{cfg.mode}.json"), cfg.to_dict())
        fn = MODE_FUNCS[cfg.mode]
        summary = fn(cfg, lock, strict) if cfg.mode in _TAKES_STRICT else fn(cfg, lock)
        summary = summary or {}
        return RunResult(cfg.mode, out_path, 0, list(lock.files), summary)
    except Exception as exc:  # any module error -> partial outputs, nonzero exit
        log.error("%s run failed: %s", cfg.mode, exc)
        partial = lock.mark_partial()
        return RunResult(cfg.mode, out_path, 1, partial, error=f"{type(exc).__name__}: {exc}")
    finally:
        lock.__exit__(None, None, None)


__all__ = [
    "RunError", "RunLocked", "GridMismatch", "RunResult", "OutputDir", "run", "compare_runs",
    "synth_user_latents", "MODE_FUNCS",
]
