import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latent_steer.io import (
    fmt,
    load_image,
    load_mask,
    read_metric_table,
    save_image,
    save_mask,
    to_uint8,
    write_metric_table,
)
from latent_steer.metrics import MetricRow, MetricTable
from latent_steer.toy import ProxyClassifier, synth_proxy_dataset, train_assessor_classifier


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_doubles(x):
    assert float(fmt(x)) == x


def test_fmt_nan_and_ints():
    assert fmt(float("nan")) == "nan" and fmt(np.int64(3)) == "3" and fmt(True) == "1"


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_image_round_trip(tmp_path, suffix):
    img = np.random.default_rng(0).uniform(size=(5, 7, 3))
    back = load_image(save_image(tmp_path / f"x{suffix}", img))
    np.testing.assert_array_equal(to_uint8(back), to_uint8(img))
    with pytest.raises(ValueError):
        save_image(tmp_path / "x.gif", img)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_mask_round_trip(tmp_path, suffix):
    g = np.random.default_rng(1).uniform(size=(6, 4)) > 0.5
    np.testing.assert_array_equal(load_mask(save_mask(tmp_path / f"m{suffix}", g)), g)


def test_metric_table_round_trip(tmp_path):
    t = MetricTable([MetricRow(-0.5, "score", 0.1 + 0.2, 1 / 3, 0, 5), MetricRow(0.5, "score", float("nan"), 0.0, 5, 5)])
    back = read_metric_table(write_metric_table(tmp_path / "t.csv", t))
    assert back.rows[0].mean == 0.1 + 0.2 and back.rows[0].std == 1 / 3
    assert np.isnan(back.rows[1].mean) and back.rows[1].n_missing == 5


def test_classifier_save_load(tmp_path):
    data = synth_proxy_dataset(24, seed=0, side=16)
    clf, rep = train_assessor_classifier(data, iterations=20)
    clf.save(tmp_path / "c.npz")
    back = ProxyClassifier.load(tmp_path / "c.npz")
    imgs = np.stack([ex.image for ex in data[:4]])
    np.testing.assert_array_equal(clf.score(imgs), back.score(imgs))
    assert rep.n_val == 5 and rep.n_train == 19
