"""Datasets: CIFAR binary records, PGM directories and synthetic power-law textures.

All images are float64 ``C×H×W`` arrays scaled to [-1, 1].
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from freqgan.errors import ConfigError, FormatError, ShapeError
from freqgan.spectral import ifft2_unitary, is_power_of_two

CIFAR_PIXELS = 3 * 32 * 32
RECORD_SIZES = {"cifar100": 2 + CIFAR_PIXELS, "cifar10": 1 + CIFAR_PIXELS}
KINDS = ("cifar100-binary", "cifar10-binary", "pgm-dir", "synthetic")

DEFAULT_TEXTURE_CLASSES = (
    {"alpha": 1.0, "orientation": None},
    {"alpha": 2.0, "orientation": 0.0, "kappa": 2.0},
)


@dataclass
class Dataset:
    kind: str
    images: np.ndarray                      # N×C×H×W in [-1, 1]
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.images.ndim != 4:
            raise ShapeError(f"dataset images must be N×C×H×W, got {self.images.shape}")
        if self.images.size and (self.images.min() < -1.0 or self.images.max() > 1.0):
            raise ShapeError("dataset images must lie in [-1, 1]")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def permutation(self, seed: int) -> np.ndarray:
        return np.random.default_rng(seed).permutation(len(self))

    def batches(self, batch_size: int, seed: int):
        """Endless stream of batches; each epoch is a fresh seeded permutation.

        Batches straddle epoch boundaries so every batch has ``batch_size`` rows.
        """
        if batch_size < 1 or len(self) == 0:
            raise ConfigError("need a positive batch size and a non-empty dataset")
        rng = np.random.default_rng(seed)
        order = np.empty(0, dtype=np.int64)
        while True:
            while len(order) < batch_size:
                order = np.concatenate([order, rng.permutation(len(self))])
            idx, order = order[:batch_size], order[batch_size:]
            yield self.images[idx]


# ---------------------------------------------------------------- CIFAR

def load_cifar_binary(path, variant: str = "cifar100") -> Dataset:
    """Parse CIFAR-10/100 binary batches (label bytes then 3×32×32 planar pixels)."""
    if variant not in RECORD_SIZES:
        raise ConfigError(f"unknown CIFAR variant {variant!r}")
    size = RECORD_SIZES[variant]
    paths = sorted(Path(path).glob("*.bin")) if Path(path).is_dir() else [Path(path)]
    images, labels = [], []
    for p in paths:
        raw = np.fromfile(p, dtype=np.uint8)
        rem = len(raw) % size
        if rem or len(raw) == 0:
            offset = len(raw) - rem
            raise FormatError(f"{p}: {len(raw)} bytes is not a multiple of the {size}-byte "
                              f"record; trailing partial record starts at byte offset {offset}")
        rec = raw.reshape(-1, size)
        n_lab = size - CIFAR_PIXELS
        labels.append(rec[:, :n_lab].astype(np.int64))
        images.append(rec[:, n_lab:].reshape(-1, 3, 32, 32))
    pixels = np.concatenate(images)
    return Dataset(f"{variant}-binary", pixels / 127.5 - 1.0, np.concatenate(labels),
                   {"paths": [str(p) for p in paths]})


def write_cifar_binary(path, pixels: np.ndarray, labels: np.ndarray) -> None:
    """Write uint8 pixels N×3×32×32 and labels N×(1 or 2) in the CIFAR record layout."""
    pixels = np.asarray(pixels, dtype=np.uint8).reshape(len(pixels), -1)
    labels = np.asarray(labels, dtype=np.uint8).reshape(len(pixels), -1)
    np.concatenate([labels, pixels], axis=1).tofile(path)


# ---------------------------------------------------------------- PGM

_PGM_HEADER = re.compile(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(?:#[^\n]*\n\s*)*(\d+)\s+"
                         rb"(?:#[^\n]*\n\s*)*(\d+)\s")


def read_pgm(path) -> np.ndarray:
    """Binary P5 greymap as a uint8 H×W array."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (magic {data[:2]!r})")
    m = _PGM_HEADER.match(data)
    if m is None:
        raise FormatError(f"{path}: malformed PGM header")
    w, h, maxval = (int(g) for g in m.groups())
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    body = data[m.end():]
    if len(body) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_pgm(path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"PGM needs a 2D image, got {image.shape}")
    if image.dtype != np.uint8:
        raise ShapeError("write_pgm takes uint8 data; use to_uint8 first")
    h, w = image.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + image.tobytes())


def to_uint8(x: np.ndarray) -> np.ndarray:
    """[-1, 1] floats to 0..255 bytes (clipped, rounded)."""
    return np.clip(np.rint((np.asarray(x) + 1.0) * 127.5), 0, 255).astype(np.uint8)


def from_uint8(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64) / 127.5 - 1.0


def load_pgm_dir(path) -> Dataset:
    files = sorted(Path(path).glob("*.pgm"))
    if not files:
        raise ConfigError(f"no .pgm files in {path}")
    imgs = [read_pgm(f) for f in files]
    if len({im.shape for im in imgs}) != 1:
        raise ShapeError(f"{path}: PGM images have differing shapes")
    return Dataset("pgm-dir", from_uint8(np.stack(imgs))[:, None], None,
                   {"files": [f.name for f in files]})


def image_grid(images: np.ndarray, cols: int | None = None) -> np.ndarray:
    """Tile N×1×H×W (or N×C×H×W, channel-averaged) into one 2D array."""
    x = np.asarray(images)
    x = x.mean(axis=1) if x.ndim == 4 else x
    n, h, w = x.shape
    cols = cols or int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    grid = np.full((rows * h, cols * w), -1.0)
    for i in range(n):
        r, c = divmod(i, cols)
        grid[r * h:(r + 1) * h, c * w:(c + 1) * w] = x[i]
    return grid


# ---------------------------------------------------------------- synthetic textures

def texture_amplitude(size: int, alpha: float, orientation: float | None = None,
                      kappa: float = 2.0) -> np.ndarray:
    """Target amplitude (1+r)^-alpha on the uncentered size×size frequency grid.

    An orientation adds an axial von Mises window exp(kappa·(cos 2(θ−θ0) − 1)),
    which is symmetric under k → −k.
    """
    k = np.fft.fftfreq(size, d=1.0 / size)
    ky, kx = np.meshgrid(k, k, indexing="ij")
    r = np.hypot(kx, ky)
    amp = (1.0 + r) ** (-alpha)
    if orientation is not None:
        theta = np.arctan2(ky, kx)
        amp = amp * np.exp(kappa * (np.cos(2.0 * (theta - orientation)) - 1.0))
    return amp


def synth_textures(n: int, size: int = 16, classes=DEFAULT_TEXTURE_CLASSES, seed: int = 0,
                   normalize: bool = True) -> Dataset:
    """Random-phase textures with a prescribed amplitude spectrum.

    Image i belongs to class ``i % len(classes)``. Each is the real part of
    the inverse transform of amplitude × e^{iφ} with φ uniform, divided by its
    own max |x| so it spans [-1, 1].
    """
    if not is_power_of_two(size):
        raise ConfigError(f"texture size must be a power of two, got {size}")
    if n < 0:
        raise ConfigError("n must be non-negative")
    classes = [dict(c) for c in classes]
    for c in classes:
        if c.get("alpha", 0.0) < 0:
            raise ConfigError(f"power-law slope must be >= 0, got {c['alpha']}")
    amps = [texture_amplitude(size, c.get("alpha", 0.0), c.get("orientation"),
                              c.get("kappa", 2.0)) for c in classes]
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % len(classes)
    phase = rng.uniform(-np.pi, np.pi, size=(n, size, size))
    spectra = np.stack([amps[c] for c in labels]) * np.exp(1j * phase) if n else \
        np.zeros((0, size, size), complex)
    x = ifft2_unitary(spectra).real
    if normalize and n:
        peak = np.abs(x).max(axis=(1, 2), keepdims=True)
        x = x / np.where(peak > 0, peak, 1.0)
    return Dataset("synthetic", x[:, None], labels,
                   {"size": size, "classes": classes, "seed": seed})


def load_dataset(spec: dict, image_size: int | None = None) -> Dataset:
    """Build a dataset from the trainer config's ``dataset`` section."""
    spec = dict(spec)
    kind = spec.pop("kind", "synthetic")
    if kind == "synthetic":
        n = int(spec.pop("n", 2048))
        seed = int(spec.pop("seed", 1234))
        classes = spec.pop("classes", DEFAULT_TEXTURE_CLASSES)
        spec.pop("path", None)
        _reject(spec, kind)
        return synth_textures(n, image_size or 16, classes, seed)
    path = spec.pop("path", None)
    _reject(spec, kind)
    if path is None:
        raise ConfigError(f"dataset kind {kind!r} needs a path")
    if kind == "pgm-dir":
        ds = load_pgm_dir(path)
    elif kind in ("cifar100-binary", "cifar10-binary"):
        ds = load_cifar_binary(path, kind.split("-")[0])
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}; expected one of {KINDS}")
    if image_size is not None and ds.image_shape[1:] != (image_size, image_size):
        raise ConfigError(f"dataset images are {ds.image_shape}, config wants {image_size}px")
    return ds


def _reject(rest: dict, kind: str) -> None:
    if rest:
        raise ConfigError(f"unknown keys for dataset kind {kind!r}: {sorted(rest)}")
