"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed together in the
terminal summary (see conftest.py) and also as each test finishes.
"""
import json
import os
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from latent_steer import autodiff as ad
from latent_steer.checks import PRIMITIVE_TOL, STACK_TOL, gradcheck_suite
from latent_steer.directions import DEFAULT_GRID, KINDS, Batch, DirectionModel, TrainConfig, alpha_sweep, per_sample_gap, train_direction
from latent_steer.explore import EmbeddingConfig, conditional_p, pca_fit_transform, perplexity_calibration, tsne_embed
from latent_steer.metrics import Mask, all_metrics, centeredness, colorfulness, object_size, segment_largest, simplicity, squareness
from latent_steer.optim import OptimState, radam_step
from latent_steer.pipeline import config_from_dict, run
from latent_steer.toy import SmoothColorfulness, ToyGenerator, shuffle_labels, synth_proxy_dataset, train_assessor_classifier

from test_explore import kmeans2_purity, two_clusters
from test_metrics import bf_colorfulness, bf_entropy, bf_gray, bf_largest, bf_redness, bf_shape, random_images
from test_optim import radam_scalar

RESULTS = []


def report(n, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {name} -- {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_1_gradient_fidelity():
    t0 = time.perf_counter()
    res = gradcheck_suite(n_compositions=20, dims=(4, 8, 16))
    dt = time.perf_counter() - t0
    prim = max(r.error for r in res if r.tolerance == PRIMITIVE_TOL)
    stack = max(r.error for r in res if r.tolerance == STACK_TOL)
    ok = all(r.passed for r in res) and len(res) == 29 and dt < 30
    report(1, "gradient fidelity", ok,
           f"max primitive err {prim:.2e} (<1e-6), max steering-loss stack err {stack:.2e} (<1e-5), {dt:.1f}s (<30s)")


def test_2_identity_law():
    G = ToyGenerator()
    A = SmoothColorfulness()
    rng = np.random.default_rng(0)
    worst, same = 0.0, True
    for kind in KINDS:
        m = DirectionModel.build(kind, 16, 8, 256, rng=rng, output_init="normal")
        b = Batch(rng.standard_normal((8, 16)), np.eye(8)[rng.integers(0, 8, 8)], np.zeros(8),
                  rng.standard_normal((8, m.z_noise_dim)) if m.z_noise_dim else None,
                  rng.standard_normal((8, m.y_noise_dim)) if m.y_noise_dim else None)
        z2, y2 = m.transform(b.z, b.y, b.alpha, b.eps_z, b.eps_y)
        img0, img1 = G(b.z, b.y).data, G(z2, y2).data
        same &= np.array_equal(z2.data, b.z) and np.array_equal(y2.data, b.y)
        same &= np.array_equal(img0, img1) and np.array_equal(A(img0), A(img1))
        worst = max(worst, float(np.max(ad.square(per_sample_gap(b, G, A, m)).data)))
    report(2, "identity law", same and worst < 1e-12,
           f"z/y/image/score bit-identical={same} for {', '.join(KINDS)}; max per-sample loss {worst:.1e} (<1e-12)")


def test_3_trained_direction_curves():
    t0 = time.perf_counter()
    G = ToyGenerator()
    A = SmoothColorfulness()
    models = {k: train_direction(TrainConfig(kind=k, iterations=5000, batch_size=8, lr=1e-3, seed=0), G, A).model
              for k in ("noise", "fixed")}
    rng = np.random.default_rng([0, 1])
    zs = rng.standard_normal((1000, 16))
    ys = np.eye(8)[rng.integers(0, 8, 1000)]
    eps = np.random.default_rng(7).standard_normal((1000, models["noise"].z_noise_dim))
    reps = {k: alpha_sweep(m, zs, ys, A, G, DEFAULT_GRID, metrics=False, eps_z=eps if m.z_noise_dim else None)
            for k, m in models.items()}
    dt = time.perf_counter() - t0
    rho = spearmanr(DEFAULT_GRID, reps["noise"].score_mean).statistic
    s_noise, s_fixed = reps["noise"].spread, reps["fixed"].spread
    ok = rho == 1.0 and s_noise >= 0.3 and s_noise >= s_fixed and dt < 300
    report(3, "trained direction curves", ok,
           f"spearman {rho:.3f} (=1), F_z spread {s_noise:.3f} (>=0.3), fixed spread {s_fixed:.3f} "
           f"(<= F_z), {dt:.0f}s (<300s)")


def test_4_radam_oracle():
    state = OptimState()
    p = [np.array([1.0])]
    got = []
    for _ in range(10):
        p, state = radam_step(p, [2 * p[0]], state)
        got.append(float(p[0][0]))
    err = max(abs(a - b) for a, b in zip(got, radam_scalar(1.0, 10)))
    report(4, "RAdam oracle", err < 1e-12, f"max |x_t - oracle| over 10 steps {err:.1e} (<1e-12), steps 1-4 unrectified")


def test_5_metric_oracles():
    gray = colorfulness(np.full((16, 16, 3), 0.5))
    c = 64
    yy, xx = np.mgrid[0:129, 0:129]
    disk = (xx - c) ** 2 + (yy - c) ** 2 <= 40 ** 2
    sq_disk = squareness(Mask(disk))
    rect = np.zeros((200, 200), bool)
    rect[80:120, 60:140] = True
    u, v = np.mgrid[0:200, 0:200] - 99.5
    t = np.deg2rad(37)
    rot = (np.abs(v * np.cos(t) + u * np.sin(t)) <= 40) & (np.abs(-v * np.sin(t) + u * np.cos(t)) <= 20)
    sq_rect, sq_rot = squareness(Mask(rect)), squareness(Mask(rot))
    cen = centeredness(Mask(disk))
    simp = simplicity(np.full((8, 8, 3), 0.25))
    full = object_size(segment_largest(np.ones((8, 8, 3))))
    worst = 0.0
    for img in random_images(50):
        m = all_metrics(img, threshold=0.4)
        fg = img @ np.array([0.299, 0.587, 0.114]) > 0.4
        size, cn, sq = bf_shape(bf_largest(fg), *fg.shape)
        ent = bf_entropy(img)
        want = dict(redness=bf_redness(img), colorfulness=bf_colorfulness(img),
                    brightness=float(np.mean([bf_gray(p) for p in img.reshape(-1, 3)])),
                    simplicity=1 - ent / 8, object_size=size, centeredness=cn, squareness=sq)
        for k, w in want.items():
            if not (np.isnan(w) and np.isnan(m[k])):
                worst = max(worst, abs(m[k] - w))
    ok = (gray == 0 and abs(sq_disk - 1) <= 1e-2 and abs(sq_rect - 0.5) <= 1e-2 and abs(sq_rot - sq_rect) <= 1e-2
          and cen == 0 and simp == 1 and full == 1 and worst < 1e-9)
    report(5, "metric oracles", ok,
           f"gray colorfulness {gray}, disk sq {sq_disk:.4f}, rect sq {sq_rect:.4f}, rotated {sq_rot:.4f}, "
           f"centered {cen}, simplicity {simp}, full-frame size {full}, brute-force max err {worst:.1e} (<1e-9)")


def test_6_classifier_proxy():
    data = synth_proxy_dataset(400, seed=0)
    _, rep = train_assessor_classifier(data, split_seed=0)
    _, ctrl = train_assessor_classifier(shuffle_labels(data, seed=0), split_seed=0)
    ok = rep.val_accuracy >= 0.90 and abs(ctrl.val_accuracy - 0.5) <= 0.1 and rep.n_val == 80
    report(6, "classifier proxy", ok,
           f"val acc {rep.val_accuracy:.3f} (>=0.90) on {rep.n_train}/{rep.n_val} split, "
           f"shuffled control {ctrl.val_accuracy:.3f} (0.5+-0.1)")


def test_7_embedding_suite():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((500, 64)) @ rng.standard_normal((64, 64))
    t0 = time.perf_counter()
    pca = pca_fit_transform(X, 50)
    res = tsne_embed(pca.projected, EmbeddingConfig(perplexity=30, iterations=1000))
    dt = time.perf_counter() - t0
    orth = np.abs(pca.components @ pca.components.T - np.eye(50)).max()
    nonincr = bool(np.all(np.diff(pca.explained_variance) <= 0))
    P, _, failed = conditional_p(pca.projected, 30)
    rows = np.abs(P.sum(axis=1) - 1).max()
    ent = max(abs(perplexity_calibration(np.delete(((pca.projected - pca.projected[i]) ** 2).sum(1), i), 30).entropy
                  - np.log2(30)) for i in range(0, 500, 25))
    kl_ok = res.kl_trace[-1] < res.kl_trace[249]
    Xc, lab = two_clusters(100)
    purity = kmeans2_purity(tsne_embed(Xc, EmbeddingConfig(perplexity=15)).embedding, lab)
    ok = orth < 1e-8 and nonincr and rows < 1e-9 and ent <= 1e-5 and not failed and kl_ok and purity == 1.0 and dt < 60
    report(7, "embedding suite", ok,
           f"PCA orth err {orth:.1e} (<1e-8), variances non-increasing={nonincr}, P row err {rows:.1e} (<1e-9), "
           f"entropy err {ent:.1e} (<=1e-5), KL {res.kl_trace[249]:.3f}->{res.kl_trace[-1]:.3f}, "
           f"2-means purity {purity:.2f}, n=500 in {dt:.1f}s (<60s)")


DET_CONFIGS = {
    "train": {"train": {"iterations": 300}},
    "sweep": {"sweep": {"n_latents": 100}},
    "synth": {"synth": {"n": 40, "side": 32}},
    "assessor": {"classifier": {"n": 80, "iterations": 300}},
    "embed": {"embed": {"n": 300, "n_users": 4, "tsne": {"iterations": 300}}},
    "gradcheck": {"gradcheck": {"compositions": 4, "dims": [4]}},
}


def test_8_determinism(tmp_path):
    bad, n = [], 0
    # metrics needs input images; both reruns read the same manifest so their configs match
    shared = tmp_path / "input"
    assert run(config_from_dict({"synth": {"n": 24, "side": 32}}, mode="synth", out=str(shared))).exit_code == 0
    zero = {"sweep": {"model": "zero", "n_latents": 20, "metrics": False}}
    assert run(config_from_dict(zero, mode="sweep", out=str(shared))).exit_code == 0
    configs = dict(DET_CONFIGS, metrics={"metrics": {"manifest": str(shared / "manifest.jsonl"),
                                                    "threshold": 0.25, "mode": "contrast"}},
                   compare={"compare": {"run_a": str(shared), "run_b": str(shared)}})
    for rep in ("a", "b"):
        out = tmp_path / rep
        for mode, data in configs.items():
            r = run(config_from_dict(json.loads(json.dumps(data)), mode=mode, seed=0, out=str(out)))
            assert r.exit_code == 0, (mode, r.error)
    for root, _, files in os.walk(tmp_path / "a"):
        for f in files:
            if f.endswith((".csv", ".lsdm", ".npz", ".json", ".jsonl")):
                n += 1
                pa = os.path.join(root, f)
                pb = pa.replace(str(tmp_path / "a"), str(tmp_path / "b"))
                if open(pa, "rb").read() != open(pb, "rb").read():
                    bad.append(f)
    report(8, "determinism", not bad and n > 10,
           f"{n} CSV/model/sidecar files across {len(configs)} modes, mismatches: {bad or 'none'}")
