import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latent_steer import autodiff as ad
from latent_steer.toy import (
    CREATIVE,
    NON_CREATIVE,
    UNLABELED,
    Brightness,
    SmoothColorfulness,
    ToyGenerator,
    ToyGeneratorConfig,
    make_assessor,
    proxy_label,
    shuffle_labels,
    synth_proxy_dataset,
)


def direct_render(z, y, cfg):
    """Per-pixel evaluation of the blob field, no factorisation."""
    k, s = cfg.n_blobs, cfg.side
    cx = (np.tanh(z[:k]) + 1) / 2
    cy = (np.tanh(z[k:2 * k]) + 1) / 2
    r = cfg.base_radius * np.exp(cfg.radius_scale * z[2 * k:3 * k])
    w = cfg.gain * (1 + np.tanh(z[3 * k:4 * k]))
    colors = np.einsum("c,cki->ki", y, cfg.palette)
    img = np.empty((s, s, 3))
    for iy in range(s):
        for ix in range(s):
            px, py = (ix + 0.5) / s, (iy + 0.5) / s
            f = np.zeros(3)
            for j in range(k):
                f += w[j] * colors[j] * np.exp(-((px - cx[j]) ** 2 + (py - cy[j]) ** 2) / (2 * r[j] ** 2))
            img[iy, ix] = 1 / (1 + np.exp(-(f - cfg.bias)))
    return img


def test_generator_matches_direct_formula():
    cfg = ToyGeneratorConfig(side=12, n_blobs=3, n_classes=4)
    rng = np.random.default_rng(3)
    z = rng.standard_normal(12)
    y = np.eye(4)[2]
    got = ToyGenerator(cfg).generate(z, y)
    np.testing.assert_allclose(got, direct_render(z, y, cfg), atol=1e-12)


def test_generator_shapes_and_range():
    G = ToyGenerator()
    z = np.random.default_rng(0).standard_normal((5, 16))
    y = np.eye(8)[[0, 1, 2, 3, 4]]
    img = G.generate(z, y)
    assert img.shape == (5, 64, 64, 3)
    assert img.min() > 0 and img.max() < 1


def test_generator_rejects_bad_inputs():
    G = ToyGenerator()
    with pytest.raises(ValueError):
        G(np.zeros((1, 8)), np.eye(8)[:1])
    with pytest.raises(ad.ShapeError):
        G(np.zeros((1, 16)), np.eye(4)[:1])
    with pytest.raises(ValueError):
        ToyGeneratorConfig(palette=np.full((8, 4, 3), 2.0))


def test_generator_gradient_check():
    G = ToyGenerator(ToyGeneratorConfig(side=10, n_blobs=2, n_classes=3))
    z = np.random.default_rng(1).standard_normal((2, 8))
    y = np.eye(3)[[0, 2]]
    assert ad.gradient_check(lambda t: ad.mean(G(t[0], t[1])), [z, y]) < 1e-6


def test_gray_image_scores():
    A = SmoothColorfulness()
    gray = np.full((1, 8, 8, 3), 0.4)
    assert A(gray)[0] == pytest.approx(1 / (1 + np.exp(3.0)), abs=1e-3)
    assert A.gray_score == pytest.approx(1 / (1 + np.exp(3.0)))
    assert Brightness()(gray)[0] == pytest.approx(0.4)


def test_smooth_colorfulness_against_numpy():
    rng = np.random.default_rng(2)
    img = rng.uniform(size=(6, 7, 3))
    rg = img[..., 0] - img[..., 1]
    yb = 0.5 * (img[..., 0] + img[..., 1]) - img[..., 2]
    ss = lambda x: np.sqrt(x + 1e-6) - np.sqrt(1e-6)
    c = ss(rg.var() + yb.var()) + 0.3 * ss(rg.mean() ** 2 + yb.mean() ** 2)
    assert SmoothColorfulness()(img) == pytest.approx(1 / (1 + np.exp(-10 * (c - 0.3))), abs=1e-12)


def test_assessor_gradients():
    A = SmoothColorfulness()
    img = np.random.default_rng(0).uniform(0.2, 0.8, (2, 5, 5, 3))
    assert ad.gradient_check(lambda t: ad.sum_(A.score_tensor(t)), img) < 1e-6
    with pytest.raises(ValueError):
        make_assessor("nope")


@pytest.mark.parametrize("count,label", [(150, CREATIVE), (101, CREATIVE), (100, UNLABELED),
                                         (50, UNLABELED), (1, UNLABELED), (0, NON_CREATIVE)])
def test_proxy_label_rule(count, label):
    assert proxy_label(count) == label


def test_proxy_label_negative():
    with pytest.raises(ValueError):
        proxy_label(-1)


def test_synth_dataset_balance_and_determinism():
    a = synth_proxy_dataset(40, seed=5, side=16)
    b = synth_proxy_dataset(40, seed=5, side=16)
    assert sum(ex.label == CREATIVE for ex in a) == 20
    assert sum(ex.label == NON_CREATIVE for ex in a) == 20
    assert all(np.array_equal(x.image, y.image) for x, y in zip(a, b))
    sh = shuffle_labels(a, seed=1)
    assert sorted(ex.label for ex in sh) == sorted(ex.label for ex in a)


@given(arrays(np.float64, (16,), elements=st.floats(-4, 4)), st.integers(0, 7))
def test_generator_output_in_unit_interval(z, c):
    img = ToyGenerator(ToyGeneratorConfig(side=8)).generate(z, np.eye(8)[c])
    assert np.all((img > 0) & (img < 1))


@given(st.floats(0, 1))
def test_score_of_uniform_images_is_gray_score(v):
    img = np.full((4, 4, 3), v)
    assert SmoothColorfulness()(img) == pytest.approx(SmoothColorfulness().gray_score, abs=1e-12)
