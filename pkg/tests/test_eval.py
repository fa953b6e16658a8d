import json

import numpy as np
import pytest
import scipy.linalg

from freqgan.data import synth_textures
from freqgan.errors import ConfigError, ContractError, NumericsError, ShapeError
from freqgan.evaluate import (
    GaussianFit, RandomConvEmbedder, ToyClassifier, embed, evaluate, frechet_distance,
    inception_score, latest_checkpoint, load_generator, make_embedder, spectral_comparison,
)
from fixtures.record_golden import tiny_config
from oracles import sqrtm_psd


def _fit(mean, cov):
    return GaussianFit(np.asarray(mean, float), np.asarray(cov, float), 100)


def test_fid_identical_fits_is_zero(rng):
    x = rng.standard_normal((50, 5))
    f = GaussianFit.from_samples(x)
    assert abs(frechet_distance(f, f)) < 1e-8


def test_fid_mean_shift_identity_cov(rng):
    v = rng.standard_normal(6)
    d = frechet_distance(_fit(np.zeros(6), np.eye(6)), _fit(v, np.eye(6)))
    assert abs(d - v @ v) < 1e-8


def test_fid_one_dimensional_closed_form():
    # (mu diff)^2 + (sa - sb)^2 with variances 4 and 1, equal means
    assert frechet_distance(_fit([0.0], [[4.0]]), _fit([0.0], [[1.0]])) == pytest.approx(1.0)


def test_fid_matches_scipy_sqrtm(rng):
    a = rng.standard_normal((40, 4))
    b = rng.standard_normal((40, 4)) @ rng.standard_normal((4, 4)) + 1
    fa, fb = GaussianFit.from_samples(a), GaussianFit.from_samples(b)
    cross = scipy.linalg.sqrtm(fa.cov @ fb.cov).real
    ref = np.sum((fa.mean - fb.mean) ** 2) + np.trace(fa.cov + fb.cov - 2 * cross)
    assert frechet_distance(fa, fb) == pytest.approx(ref, rel=1e-8)
    # second independent route: symmetric square roots
    ra = sqrtm_psd(fa.cov)
    ref2 = np.sum((fa.mean - fb.mean) ** 2) + np.trace(fa.cov + fb.cov) - 2 * np.trace(
        sqrtm_psd(ra @ fb.cov @ ra))
    assert frechet_distance(fa, fb) == pytest.approx(ref2, rel=1e-10)


def test_fid_symmetric(rng):
    fa = GaussianFit.from_samples(rng.standard_normal((30, 3)))
    fb = GaussianFit.from_samples(2 * rng.standard_normal((30, 3)))
    assert frechet_distance(fa, fb) == pytest.approx(frechet_distance(fb, fa), rel=1e-9)


def test_fid_errors():
    with pytest.raises(ShapeError):
        frechet_distance(_fit([0.0], [[1.0]]), _fit([0.0, 0.0], np.eye(2)))
    with pytest.raises(NumericsError):
        frechet_distance(_fit([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]]), _fit([0.0, 0.0], np.eye(2)))
    with pytest.raises(ShapeError):
        GaussianFit.from_samples(np.ones((1, 3)))


def test_covariance_hand_case():
    x = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 1.0]])
    f = GaussianFit.from_samples(x)
    assert np.allclose(f.mean, [1.0, 1.0])
    assert np.allclose(f.cov, [[1.0, 0.5], [0.5, 1.0]])
    assert np.allclose(f.cov, np.cov(x.T))


def test_is_uniform_posteriors_is_one():
    p = np.full((40, 5), 0.2)
    assert abs(inception_score(p, splits=4)[0] - 1.0) < 1e-9


@pytest.mark.parametrize("c", [2, 5, 10])
def test_is_balanced_one_hot_is_class_count(c):
    p = np.tile(np.eye(c), (4, 1))
    mean, std = inception_score(p, splits=4)
    assert abs(mean - c) < 1e-9 and std < 1e-12


def test_is_hand_case():
    p = np.array([[1.0, 0.0], [0.5, 0.5]])
    # marginal (0.75, 0.25); KL rows: log(4/3), 0.5 log(2/3) + 0.5 log 2
    kl = (np.log(4 / 3) + 0.5 * np.log(2 / 3) + 0.5 * np.log(2)) / 2
    assert inception_score(p, splits=1)[0] == pytest.approx(np.exp(kl))


def test_is_errors():
    with pytest.raises(ContractError):
        inception_score(np.array([[0.7, 0.7]]), splits=1)
    with pytest.raises(ContractError):
        inception_score(np.full((3, 2), 0.5), splits=4)
    with pytest.raises(ShapeError):
        inception_score(np.zeros((0, 3)))


def test_random_embedder_deterministic(rng):
    x = rng.uniform(-1, 1, (5, 1, 16, 16))
    a = RandomConvEmbedder(1, 16, seed=3)(x)
    b = RandomConvEmbedder(1, 16, seed=3)(x)
    assert a.shape == (5, 16) and np.array_equal(a, b)
    assert np.allclose(embed(x, "fixed-random-conv", 16, 3), a)
    with pytest.raises(ShapeError):
        RandomConvEmbedder(3, 16)(x)


def test_toy_classifier_linear_probe():
    train = synth_textures(256, seed=0)
    test = synth_textures(128, seed=1)
    clf = make_embedder("trained-toy-classifier", 1, 32, seed=0, train_set=train)
    assert isinstance(clf, ToyClassifier)
    acc = np.mean(clf.posteriors(test.images).argmax(axis=1) == test.labels)
    assert acc > 0.8
    p = clf.posteriors(test.images)
    assert np.allclose(p.sum(axis=1), 1.0)


def test_make_embedder_errors():
    with pytest.raises(ConfigError):
        make_embedder("inception", 1)
    with pytest.raises(ConfigError):
        make_embedder("trained-toy-classifier", 1)


def test_spectral_comparison_self_is_zero():
    x = synth_textures(16, seed=2).images
    out = spectral_comparison(x, x)
    assert out["psd_high_quartile"] == 0.0
    assert np.all(out["psd"].values == 0) and np.all(out["gap"].values == 0)


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    from freqgan.gan import train
    cfg = tiny_config("freqgan")
    cfg.out_dir = str(tmp_path_factory.mktemp("run"))
    cfg.iters = 2
    train(cfg, synth_textures(64, seed=5))
    return cfg


def test_load_generator_round_trip(tiny_run):
    G, cfg, meta = load_generator(tiny_run.out_dir)
    assert meta["iteration"] == 2 and cfg == tiny_run
    assert latest_checkpoint(tiny_run.out_dir).name == "iter0002.json"
    with pytest.raises(FileNotFoundError):
        load_generator(tiny_run.out_dir, checkpoint=f"{tiny_run.out_dir}/checkpoints/iter9999")
    with pytest.raises(ConfigError):
        load_generator()


def test_evaluate_report_schema(tiny_run, tmp_path):
    report = evaluate(tiny_run.out_dir, n_samples=40, out=tmp_path / "ev")
    saved = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert saved == report
    assert report["schema"] == "freqgan-eval-1"
    for key in ("frechet_distance", "inception_score", "psd_high_quartile", "amplitude_gap_mean"):
        assert np.isfinite(report[key]), key
    assert len(report["psd_distance"]) == 8
    assert (tmp_path / "ev" / "psd.csv").exists() and (tmp_path / "ev" / "amplitude_gap.csv").exists()
    assert 1.0 <= report["inception_score"] <= 2.0


def test_evaluate_rejects_zero_samples(tiny_run, tmp_path):
    with pytest.raises(ConfigError):
        evaluate(tiny_run.out_dir, n_samples=0, out=tmp_path)
