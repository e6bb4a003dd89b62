import json
import os

import numpy as np
import pytest

from latent_steer.io import read_csv, read_metric_table, write_csv
from latent_steer.pipeline import (
    ConfigError,
    GridMismatch,
    ManifestError,
    compare_runs,
    config_from_dict,
    ingest_manifest,
    load_config,
    run,
)
from latent_steer.pipeline.cli import main
from latent_steer.pipeline.runner import LOCKFILE

SMALL = {"train": {"iterations": 30, "hidden": 16}, "sweep": {"n_latents": 12}}


def cfg(tmp_path, mode, name="run", **extra):
    data = json.loads(json.dumps(SMALL))
    for k, v in extra.items():
        data.setdefault(k, {}).update(v) if isinstance(v, dict) else data.__setitem__(k, v)
    return config_from_dict(data, mode=mode, out=str(tmp_path / name))


def rec(i, count, path="img.png", **kw):
    d = {"image_id": f"i{i}", "path": path, "ancestor_count": count, "user_id": "u",
         "width": 4, "height": 4}
    d.update(kw)
    return json.dumps(d)


@pytest.fixture
def manifest(tmp_path):
    from latent_steer.io import save_image

    save_image(tmp_path / "img.png", np.random.default_rng(0).uniform(size=(4, 4, 3)))
    lines = [rec(0, 150), rec(1, 0), rec(2, 50), "{not json", rec(4, 3, path="missing.png"),
             json.dumps({"image_id": "i5"}), rec(0, 7)]
    p = tmp_path / "m.jsonl"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_manifest_labels_and_errors(manifest):
    m = ingest_manifest(manifest)
    labels = {r.image_id: r.label for r in m.records}
    assert labels == {"i0": "creative", "i1": "non-creative", "i2": "unlabeled", "i4": "unlabeled"}
    assert [e[0] for e in m.errors] == [4, 6, 7]
    assert "duplicate" in m.errors[2][1]
    assert [r.image_id for r in m.records if r.missing] == ["i4"]
    assert [r.image_id for r in m.labelled()] == ["i0", "i1"]


def test_manifest_strict_reports_line(manifest):
    with pytest.raises(ManifestError, match="line 4"):
        ingest_manifest(manifest, strict=True)


def test_manifest_rejects_bad_fields(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text(rec(0, -1) + "\n" + rec(1, 2.5) + "\n" + rec(2, True) + "\n")
    assert len(ingest_manifest(p).errors) == 3


def test_config_defaults_and_validation(tmp_path):
    c = load_config(None)
    assert c.train.iterations == 5000 and c.train.batch_size == 8 and c.train.lr == 1e-3
    assert c.sweep.alphas == [-0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    with pytest.raises(ConfigError):
        config_from_dict({"trian": {}})
    with pytest.raises(ConfigError):
        config_from_dict({"train": {"iters": 3}})
    with pytest.raises(ConfigError):
        config_from_dict({"sweep": {"alphas": [0.2, 0.1]}})
    with pytest.raises(ConfigError):
        config_from_dict({"mode": "fly"})
    bad = tmp_path / "c.json"
    bad.write_text("[1]")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_sidecar_reproduces_config(tmp_path):
    c = cfg(tmp_path, "train", seed=4)
    again = config_from_dict(json.loads(c.to_json()), out=c.out)
    assert again.to_json() == c.to_json()
    assert again.train.seed == 4


def test_train_sweep_compare_and_determinism(tmp_path):
    for name in ("a", "b"):
        assert run(cfg(tmp_path, "train", name)).exit_code == 0
        res = run(cfg(tmp_path, "sweep", name))
        assert res.exit_code == 0, res.error
    a, b = tmp_path / "a", tmp_path / "b"
    for f in sorted(os.listdir(a)):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    header, rows = read_csv(a / "sweep.csv")
    assert header == ["alpha", "metric", "mean", "std", "n_missing"]
    t = read_metric_table(a / "sweep.csv")
    assert t.alphas() == [-0.5, -0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    svg = (a / "sweep_score.svg").read_text()
    assert "0.5" in svg and "-0.5" in svg.replace("−", "-")
    for m in ("score", "redness", "colorfulness", "brightness", "simplicity", "object_size",
              "centeredness", "squareness"):
        assert (a / f"sweep_{m}.svg").exists()
    assert not (a / LOCKFILE).exists()

    files = compare_runs(a, b, tmp_path / "cmp")
    _, rows = read_csv(tmp_path / "cmp" / "comparison.csv")
    assert all(float(r[3]) == 0.0 for r in rows) and len(rows) == 11
    assert any(p.suffix == ".svg" for p in files)


def test_compare_grid_mismatch_writes_nothing(tmp_path):
    assert run(cfg(tmp_path, "sweep", "a", sweep={"model": "zero"})).exit_code == 0
    assert run(cfg(tmp_path, "sweep", "b", sweep={"model": "zero", "alphas": [-0.5, 0.0, 0.5]})).exit_code == 0
    with pytest.raises(GridMismatch):
        compare_runs(tmp_path / "a", tmp_path / "b", tmp_path / "cmp")
    assert not (tmp_path / "cmp").exists()


def test_failure_marks_partial(tmp_path):
    res = run(cfg(tmp_path, "sweep", "x"))          # no model trained
    assert res.exit_code == 1
    names = sorted(os.listdir(tmp_path / "x"))
    assert names == ["config.sweep.json.partial"]


def test_lock_blocks_second_run(tmp_path):
    (tmp_path / "run").mkdir()
    (tmp_path / "run" / LOCKFILE).write_text("1\n")
    res = run(cfg(tmp_path, "gradcheck", "run"))
    assert res.exit_code == 3 and "locked" in res.error


def test_synth_metrics_assessor_chain(tmp_path):
    assert run(cfg(tmp_path, "synth", "syn", synth={"n": 16, "side": 16})).exit_code == 0
    man = ingest_manifest(tmp_path / "syn" / "manifest.jsonl")
    assert len(man.records) == 16 and not any(r.missing for r in man.records)
    res = run(cfg(tmp_path, "metrics", "met", metrics={"manifest": str(tmp_path / "syn" / "manifest.jsonl")}))
    assert res.exit_code == 0 and res.summary["n_images"] == 16
    header, rows = read_csv(tmp_path / "met" / "metrics.csv")
    assert header[:4] == ["image_id", "user_id", "ancestor_count", "label"] and len(rows) == 16
    res = run(cfg(tmp_path, "assessor", "clf", classifier={
        "manifest": str(tmp_path / "syn" / "manifest.jsonl"), "iterations": 50}))
    assert res.exit_code == 0, res.error
    assert (tmp_path / "clf" / "classifier.npz").exists()


def test_metrics_manifest_alpha_groups(tmp_path):
    from latent_steer.io import save_image

    rng = np.random.default_rng(0)
    lines = []
    for i, a in enumerate([-0.5, -0.5, 0.5, 0.5]):
        save_image(tmp_path / f"{i}.png", rng.uniform(size=(8, 8, 3)))
        lines.append(rec(i, 0, path=f"{i}.png", alpha=a))
    (tmp_path / "m.jsonl").write_text("\n".join(lines) + "\n")
    res = run(cfg(tmp_path, "metrics", "met", metrics={"manifest": str(tmp_path / "m.jsonl")}))
    assert res.exit_code == 0
    assert read_metric_table(tmp_path / "met" / "sweep.csv").alphas() == [-0.5, 0.5]


def test_embed_from_csv(tmp_path):
    X = np.random.default_rng(0).standard_normal((40, 5))
    write_csv(tmp_path / "lat.csv", ["id", "user_id", *"abcde"],
              ((f"i{k}", f"u{k % 2}", *X[k]) for k in range(40)))
    res = run(cfg(tmp_path, "embed", "emb", embed={
        "source": "csv", "path": str(tmp_path / "lat.csv"), "min_count": None, "max_count": None,
        "tsne": {"perplexity": 5, "iterations": 300}}))
    assert res.exit_code == 0, res.error
    header, rows = read_csv(tmp_path / "emb" / "embedding.csv")
    assert header == ["x", "y", "user_id", "image_id"] and len(rows) == 40
    _, kl = read_csv(tmp_path / "emb" / "kl.csv")
    assert float(kl[-1][1]) < float(kl[249][1])


def test_cli_gradcheck_and_delimited_output(tmp_path, capsys):
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"gradcheck": {"compositions": 2, "dims": [4]}}))
    code = main(["gradcheck", "--config", str(c), "--out", str(tmp_path / "g"), "--seed", "1"])
    out = capsys.readouterr().out
    assert code == 0
    block = out.split("=== latent-steer result ===")[1].split("=== end ===")[0]
    assert json.loads(block)["summary"]["n_checks"] == 5
    assert main(["train", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["train", "a", "b"]) == 2
