"""Fréchet distance, Inception-Score formula and spectral comparison reports.

There is no pretrained Inception network here. Embeddings come from a
seeded random convolutional feature map, or from a small classifier
trained on the toy labels. Absolute numbers are therefore only comparable
between runs evaluated with the same embedder.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from freqgan.data import Dataset, load_dataset
from freqgan.errors import ConfigError, ContractError, NumericsError, ShapeError
from freqgan.gan import TrainConfig, sample
from freqgan.nn.arch import build_generator
from freqgan.nn.layers import Linear
from freqgan.spectral import (
    amplitude_gap_2d, dft2, grayscale, high_frequency_mean, power_spectrum, psd_distance,
    write_gap_csv, write_profile_csv,
)
from freqgan.tensor import Adam, Tensor, backward, no_grad, ops
from freqgan.tensor.checkpoint import load_checkpoint

EMBEDDERS = ("fixed-random-conv", "trained-toy-classifier")
EIG_TOL = 1e-8


# ---------------------------------------------------------------- embedders

class RandomConvEmbedder:
    """Two fixed He-initialized 3×3 conv + ReLU stages, global average pooling.

    The output concatenates per-channel means of both stages and is mapped
    to ``dim`` features by a fixed random projection.
    """

    def __init__(self, in_channels: int, dim: int = 64, seed: int = 0, width: int = 32):
        rng = np.random.default_rng(seed)
        self.w1 = rng.standard_normal((width, in_channels, 3, 3)) * np.sqrt(2.0 / (9 * in_channels))
        self.w2 = rng.standard_normal((2 * width, width, 3, 3)) * np.sqrt(2.0 / (9 * width))
        self.proj = rng.standard_normal((3 * width, dim)) / np.sqrt(3 * width)
        self.dim = dim

    def __call__(self, images: np.ndarray, chunk: int = 256) -> np.ndarray:
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 4 or images.shape[1] != self.w1.shape[1]:
            raise ShapeError(f"embedder expects N×{self.w1.shape[1]}×H×W, got {images.shape}")
        rows = []
        with no_grad():
            for start in range(0, len(images), chunk):
                x = Tensor(images[start:start + chunk])
                h1 = ops.relu(ops.conv2d(x, Tensor(self.w1), pad=1))
                h2 = ops.relu(ops.conv2d(ops.avg_pool2d(h1, 2), Tensor(self.w2), pad=1))
                feats = np.concatenate([h1.data.mean(axis=(2, 3)), h2.data.mean(axis=(2, 3))], 1)
                rows.append(feats @ self.proj)
        return np.concatenate(rows) if rows else np.zeros((0, self.dim))


class ToyClassifier:
    """Softmax MLP on top of random-conv features, trained on dataset labels.

    ``embed`` returns the hidden layer, ``posteriors`` the class probabilities.
    """

    def __init__(self, base: RandomConvEmbedder, n_classes: int, seed: int = 0, hidden: int = 64):
        rng = np.random.default_rng(seed + 1)
        self.base = base
        self.l1 = Linear(base.dim, hidden, rng)
        self.l2 = Linear(hidden, n_classes, rng)
        self.mu = np.zeros(base.dim)
        self.sd = np.ones(base.dim)

    def _hidden(self, feats: Tensor) -> Tensor:
        return ops.relu(self.l1(feats))

    def fit(self, images: np.ndarray, labels: np.ndarray, steps: int = 300, lr: float = 1e-2,
            seed: int = 0) -> "ToyClassifier":
        feats = self.base(images)
        self.mu, self.sd = feats.mean(axis=0), feats.std(axis=0) + 1e-8
        z = (feats - self.mu) / self.sd
        n_classes = self.l2.weight.shape[0]
        onehot = np.eye(n_classes)[labels]
        params = {**self.l1.parameters("l1."), **self.l2.parameters("l2.")}
        opt = Adam(params, beta1=0.9, beta2=0.999)
        rng = np.random.default_rng(seed)
        for _ in range(steps):
            idx = rng.choice(len(z), size=min(128, len(z)), replace=False)
            logp = ops.log_softmax(self.l2(self._hidden(Tensor(z[idx]))))
            loss = ops.scale(ops.sum(ops.mul(logp, Tensor(onehot[idx]))), -1.0 / len(idx))
            opt.zero_grad()
            backward(loss)
            opt.step(lr)
        return self

    def embed(self, images: np.ndarray) -> np.ndarray:
        with no_grad():
            return self._hidden(Tensor((self.base(images) - self.mu) / self.sd)).data

    def posteriors(self, images: np.ndarray) -> np.ndarray:
        with no_grad():
            h = self._hidden(Tensor((self.base(images) - self.mu) / self.sd))
            return np.exp(ops.log_softmax(self.l2(h)).data)


def make_embedder(kind: str, in_channels: int, dim: int = 64, seed: int = 0,
                  train_set: Dataset | None = None):
    if kind == "fixed-random-conv":
        return RandomConvEmbedder(in_channels, dim, seed)
    if kind == "trained-toy-classifier":
        if train_set is None or train_set.labels is None:
            raise ConfigError("the classifier embedder needs a labelled training set")
        labels = np.asarray(train_set.labels).reshape(len(train_set), -1)[:, -1]
        classes, labels = np.unique(labels, return_inverse=True)
        clf = ToyClassifier(RandomConvEmbedder(in_channels, dim, seed), len(classes), seed)
        return clf.fit(train_set.images, labels, seed=seed)
    raise ConfigError(f"unknown embedder {kind!r}; expected one of {EMBEDDERS}")


def embed(images: np.ndarray, embedder="fixed-random-conv", dim: int = 64, seed: int = 0) -> np.ndarray:
    """Row-per-image feature matrix. ``embedder`` is a kind string or a built embedder."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4:
        raise ShapeError(f"embed expects N×C×H×W images, got {images.shape}")
    if isinstance(embedder, str):
        embedder = make_embedder(embedder, images.shape[1], dim, seed)
    return embedder.embed(images) if isinstance(embedder, ToyClassifier) else embedder(images)


# ---------------------------------------------------------------- Fréchet distance

@dataclass
class GaussianFit:
    mean: np.ndarray
    cov: np.ndarray
    n: int

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "GaussianFit":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or len(x) < 2:
            raise ShapeError(f"need an N×d sample matrix with N >= 2, got {x.shape}")
        mu = x.mean(axis=0)
        c = x - mu
        cov = c.T @ c / (len(x) - 1)
        return cls(mu, 0.5 * (cov + cov.T), len(x))

    @property
    def dim(self) -> int:
        return len(self.mean)


def _psd_eig(m: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    if vals.size and vals.min() < -EIG_TOL * scale:
        raise NumericsError(f"{what} is not positive semidefinite (eigenvalue {vals.min():.3g})")
    return np.clip(vals, 0.0, None), vecs


def frechet_distance(a: GaussianFit, b: GaussianFit) -> float:
    """‖μa − μb‖² + Tr(Σa + Σb − 2(Σa Σb)^{1/2}).

    Tr((Σa Σb)^{1/2}) is computed as Tr((Σa^{1/2} Σb Σa^{1/2})^{1/2}), a
    symmetric PSD matrix, so only symmetric eigendecompositions are needed.
    """
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch {a.dim} vs {b.dim}")
    va, Ua = _psd_eig(a.cov, "first covariance")
    _psd_eig(b.cov, "second covariance")
    root_a = (Ua * np.sqrt(va)) @ Ua.T
    inner, _ = _psd_eig(root_a @ b.cov @ root_a, "covariance product")
    diff = a.mean - b.mean
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sqrt(inner).sum())
    return max(value, 0.0)


# ---------------------------------------------------------------- Inception Score

def inception_score(posteriors: np.ndarray, splits: int = 10) -> tuple[float, float]:
    """exp(E_x KL(p(y|x) ‖ p(y))) per split; returns (mean, std) over splits."""
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2 or len(p) == 0:
        raise ShapeError(f"posteriors must be a non-empty N×C matrix, got {p.shape}")
    if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-6):
        raise ContractError("every posterior row must be a probability distribution")
    if not 1 <= splits <= len(p):
        raise ContractError(f"splits must be in [1, N={len(p)}], got {splits}")
    scores = []
    for part in np.array_split(p, splits):
        marginal = part.mean(axis=0)
        ratio = np.divide(part, marginal, out=np.ones_like(part), where=part > 0)
        kl = np.sum(np.where(part > 0, part * np.log(ratio), 0.0), axis=1)
        scores.append(np.exp(kl.mean()))
    return float(np.mean(scores)), float(np.std(scores))


# ---------------------------------------------------------------- spectral comparison

def spectral_comparison(real: np.ndarray, fake: np.ndarray) -> dict:
    """Power-spectrum distance profile, its top-quartile mean and the 2D amplitude gap."""
    sr, sf = dft2(grayscale(real)[:, 0]), dft2(grayscale(fake)[:, 0])
    profile = psd_distance(power_spectrum(sr).values, power_spectrum(sf).values)
    gap = amplitude_gap_2d(sr.amplitude, sf.amplitude)
    return {"psd": profile, "gap": gap, "psd_high_quartile": high_frequency_mean(profile, 0.25)}


def latest_checkpoint(run_dir) -> Path:
    ckpts = sorted(Path(run_dir, "checkpoints").glob("iter*.json"))
    if not ckpts:
        raise FileNotFoundError(f"no checkpoints under {run_dir}/checkpoints")
    return ckpts[-1]


def load_generator(run_dir=None, checkpoint=None, config: TrainConfig | None = None):
    """Rebuild the generator from a checkpoint; config defaults to ``<run_dir>/config.json``."""
    if config is None:
        if run_dir is None:
            raise ConfigError("need a run directory or a config")
        config = TrainConfig.from_json(Path(run_dir) / "config.json")
    run_dir = Path(run_dir) if run_dir is not None else Path(config.out_dir)
    ckpt = Path(checkpoint) if checkpoint is not None else latest_checkpoint(run_dir)
    if not ckpt.with_suffix(".json").exists():
        raise FileNotFoundError(f"checkpoint {ckpt} not found")
    arrays, meta = load_checkpoint(ckpt)
    G = build_generator(config.arch, np.random.default_rng(0), config.width_div, config.latent_dim)
    G.load_state_arrays(arrays, "G.")
    return G, config, meta


def evaluate(run_dir=None, dataset: Dataset | None = None, n_samples: int = 2000,
             checkpoint=None, out=None, embedder: str = "fixed-random-conv", seed: int = 0,
             config: TrainConfig | None = None) -> dict:
    """Compare generator samples against real images; writes report.json and CSVs.

    The report lands at ``out`` (a ``.json`` path or a directory; default
    ``<run_dir>/eval``) with ``psd.csv`` and ``amplitude_gap.csv`` alongside.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    G, config, meta = load_generator(run_dir, checkpoint, config)
    run_dir = Path(run_dir) if run_dir is not None else Path(config.out_dir)
    real_set = dataset if dataset is not None else load_dataset(config.dataset, config.image_size)
    rng = np.random.default_rng(seed)
    n = min(n_samples, len(real_set))
    real = real_set.images[rng.permutation(len(real_set))[:n]]
    fake = sample(G, n_samples, config.latent_dim, seed + 1)

    emb = make_embedder(embedder, real.shape[1], 64, seed, real_set)
    fr, ff = embed(real, emb), embed(fake, emb)
    fid = frechet_distance(GaussianFit.from_samples(fr), GaussianFit.from_samples(ff))
    is_mean = is_std = None
    if real_set.labels is not None and n_samples >= 10:
        clf = emb if isinstance(emb, ToyClassifier) else make_embedder(
            "trained-toy-classifier", real.shape[1], 64, seed, real_set)
        is_mean, is_std = inception_score(clf.posteriors(fake), splits=10)
    spec = spectral_comparison(real, fake)

    out = Path(out) if out is not None else Path(run_dir) / "eval"
    report_path = out if out.suffix == ".json" else out / "report.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    psd_csv = report_path.with_name("psd.csv")
    gap_csv = report_path.with_name("amplitude_gap.csv")
    write_profile_csv(psd_csv, spec["psd"])
    write_gap_csv(gap_csv, spec["gap"])
    report = {
        "schema": "freqgan-eval-1",
        "note": "desk-scale embedder; not comparable to Inception-network FID/IS",
        "run_dir": str(run_dir), "checkpoint": str(checkpoint) if checkpoint else None,
        "iteration": meta.get("iteration"),
        "freq_path": config.freq_path, "embedder": embedder,
        "n_real": int(n), "n_fake": int(n_samples),
        "frechet_distance": fid, "inception_score": is_mean, "inception_score_std": is_std,
        "psd_distance": [float(v) for v in spec["psd"].values],
        "psd_distance_mask": [bool(m) for m in spec["psd"].mask],
        "psd_high_quartile": spec["psd_high_quartile"],
        "amplitude_gap_mean": float(spec["gap"].values[~spec["gap"].mask].mean()),
        "files": {"psd": psd_csv.name, "amplitude_gap": gap_csv.name},
    }
    report_path.write_text(json.dumps(report, indent=1))
    return report
