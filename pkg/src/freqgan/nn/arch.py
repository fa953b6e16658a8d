"""Generator and discriminator architectures, built from per-tag row tables.

Each table row corresponds to one residual block; ``describe_*`` helpers
propagate shapes through the tables without allocating weights, so the
full-size tags can be checked cheaply. The toy tag divides the channel
counts by ``width_div``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freqgan.errors import ConfigError, ShapeError
from freqgan.evfreq import EVFreqLayer
from freqgan.nn.layers import BatchNorm, Conv, Linear, Module, ResBlock
from freqgan.spectral import is_power_of_two
from freqgan.tensor import Tensor, ops

ARCHS = ("cifar-like", "stl-like", "toy")
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class GenSpec:
    latent: int
    base: tuple[int, int, int]          # (C, h, w) after the FC reshape
    blocks: tuple[tuple[int, int, bool], ...]   # (c_in, c_out, up)
    out_channels: int


@dataclass(frozen=True)
class DiscSpec:
    in_channels: int
    size: int
    spatial: tuple[tuple[int, int, bool, bool], ...]   # (c_in, c_out, down, pre_activation)
    freq: tuple[tuple[int, int], ...]                   # (c_in, c_out)
    freq_pool: bool = True

    @property
    def spatial_features(self) -> int:
        return self.spatial[-1][1]

    @property
    def freq_features(self) -> int:
        return self.freq[-1][1]


def _div(c: int, width_div: int) -> int:
    return max(1, c // width_div)


def generator_spec(arch: str, width_div: int = 8, latent: int | None = None) -> GenSpec:
    if arch == "cifar-like":
        return GenSpec(latent or 128, (256, 4, 4),
                       ((256, 256, True), (256, 256, False), (256, 256, True),
                        (256, 256, False), (256, 256, True),
                        (256, 256, False), (256, 256, False), (256, 256, False)), 3)
    if arch == "stl-like":
        return GenSpec(latent or 128, (512, 6, 6),
                       ((512, 256, True), (256, 256, False), (256, 128, True),
                        (128, 128, False), (128, 64, True),
                        (64, 64, False), (64, 64, False), (64, 64, False)), 3)
    if arch == "toy":
        g = _div(128, width_div)
        return GenSpec(latent or 32, (g, 4, 4), ((g, g, True), (g, g, True)), 1)
    raise ConfigError(f"unknown arch {arch!r}; expected one of {ARCHS}")


def discriminator_spec(arch: str, width_div: int = 8) -> DiscSpec:
    if arch == "cifar-like":
        c = 128
        spatial = ((3, c, False, False), (c, c, True, False), (c, c, False, True),
                   (c, c, True, True)) + ((c, c, False, True),) * 4
        return DiscSpec(3, 32, spatial, ((1, 128), (128, 128)))
    if arch == "stl-like":
        spatial = ((3, 64, False, False), (64, 64, True, False), (64, 128, False, True),
                   (128, 128, True, True), (128, 256, False, True), (256, 256, True, True),
                   (256, 512, False, True), (512, 512, True, True), (512, 1024, False, True),
                   (1024, 1024, False, True))
        return DiscSpec(3, 48, spatial, ((1, 256), (256, 1024)))
    if arch == "toy":
        d = _div(64, width_div)
        spatial = ((1, d, False, False), (d, d, True, False))
        return DiscSpec(1, 16, spatial, ((1, d),))
    raise ConfigError(f"unknown arch {arch!r}; expected one of {ARCHS}")


def describe_generator(spec: GenSpec) -> list[tuple[str, tuple, tuple]]:
    """Row-by-row (name, input shape, output shape) without building weights."""
    rows = [("fc", (spec.latent,), spec.base)]
    c, h, w = spec.base
    for i, (ci, co, up) in enumerate(spec.blocks):
        if ci != c:
            raise ShapeError(f"generator row {i}: expects {ci} channels, gets {c}")
        h, w = (2 * h, 2 * w) if up else (h, w)
        rows.append((f"block{i}", (c, h // 2, w // 2) if up else (c, h, w), (co, h, w)))
        c = co
    rows.append(("out", (c, h, w), (spec.out_channels, h, w)))
    return rows


def describe_discriminator(spec: DiscSpec) -> dict[str, list[tuple[str, tuple, tuple]]]:
    spatial, freq = [], []
    c, s = spec.in_channels, spec.size
    for i, (ci, co, down, _) in enumerate(spec.spatial):
        if ci != c:
            raise ShapeError(f"spatial row {i}: expects {ci} channels, gets {c}")
        out = s // 2 if down else s
        spatial.append((f"block{i}", (c, s, s), (co, out, out)))
        c, s = co, out
    spatial.append(("global_sum", (c, s, s), (c,)))
    c, s = 1, spec.size
    for i, (ci, co) in enumerate(spec.freq):
        if ci != c:
            raise ShapeError(f"frequency row {i}: expects {ci} channels, gets {c}")
        freq.append((f"block{i}", (c, s, s), (co, s, s)))
        c = co
    if spec.freq_pool:
        freq.append(("max_pool", (c, s, s), (c, s // 2, s // 2)))
        s //= 2
    freq.append(("global_sum", (c, s, s), (c,)))
    heads = [("s_x", (spec.spatial_features,), (1,)), ("s_f", (spec.freq_features,), (1,)),
             ("s_xf", (spec.spatial_features + spec.freq_features,), (1,))]
    return {"spatial": spatial, "frequency": freq, "heads": heads}


class Generator(Module):
    """FC, reshape, residual stack, then BN, ReLU, 3×3 conv, Tanh."""

    def __init__(self, spec: GenSpec, rng: np.random.Generator):
        self.spec = spec
        c, h, w = spec.base
        self.fc = Linear(spec.latent, c * h * w, rng)
        self.blocks = [ResBlock(ci, co, rng, up=up, bn=True) for ci, co, up in spec.blocks]
        c_last = spec.blocks[-1][1] if spec.blocks else c
        self.bn = BatchNorm(c_last)
        self.conv = Conv(c_last, spec.out_channels, 3, rng, pad=1)

    def forward(self, z: Tensor) -> Tensor:
        if z.ndim != 2 or z.shape[1] != self.spec.latent:
            raise ShapeError(f"generator expects B×{self.spec.latent} latents, got {z.shape}")
        h = ops.reshape(self.fc(z), (z.shape[0],) + self.spec.base)
        for block in self.blocks:
            h = block(h)
        return ops.tanh(self.conv(ops.relu(self.bn(h))))


class SpatialPath(Module):
    def __init__(self, spec: DiscSpec, rng: np.random.Generator):
        self.blocks = [ResBlock(ci, co, rng, down=down, pre_activation=pre)
                       for ci, co, down, pre in spec.spatial]

    def forward(self, x: Tensor) -> Tensor:
        h = x
        for block in self.blocks:
            h = block(h)
        return ops.global_sum_pool(ops.relu(h))


class FrequencyPath(Module):
    """EV-Freq layer followed by global sum pooling.

    ``final_relu`` inserts a ReLU before the sum: the sum over a real IFFT
    output only sees the DC bin of each channel otherwise.
    """

    def __init__(self, spec: DiscSpec, rng: np.random.Generator, pooling: bool | None = None,
                 final_relu: bool = True):
        pow2 = is_power_of_two(spec.size)
        self.layer = EVFreqLayer([ResBlock(ci, co, rng) for ci, co in spec.freq],
                                 pooling=spec.freq_pool if pooling is None else pooling,
                                 allow_direct_dft=not pow2)
        self.final_relu = final_relu

    @property
    def imag_residual(self) -> float:
        return self.layer.last_imag_residual

    def forward(self, gray: Tensor) -> Tensor:
        h = self.layer(gray)
        return ops.global_sum_pool(ops.relu(h) if self.final_relu else h)


class Heads(Module):
    """Linear heads: s_x on spatial features, s_f on frequency features, s_xf on both."""

    def __init__(self, n_spatial: int, n_freq: int | None, rng: np.random.Generator):
        self.s_x = Linear(n_spatial, 1, rng)
        self.s_f = Linear(n_freq, 1, rng) if n_freq else None
        self.s_xf = Linear(n_spatial + n_freq, 1, rng) if n_freq else None

    def forward(self, feat_x: Tensor, feat_f: Tensor | None):
        sx = ops.reshape(self.s_x(feat_x), (feat_x.shape[0],))
        if self.s_f is None or feat_f is None:
            return sx, None, None
        sf = ops.reshape(self.s_f(feat_f), (feat_f.shape[0],))
        joint = ops.concat([feat_x, feat_f], axis=1)
        sxf = ops.reshape(self.s_xf(joint), (joint.shape[0],))
        return sx, sf, sxf


def to_grayscale(x: Tensor) -> Tensor:
    """Luma of a B×3×H×W tensor as B×1×H×W (differentiable); 1-channel passes through."""
    c = x.shape[1]
    if c == 1:
        return x
    if c != 3:
        raise ShapeError(f"grayscale needs 1 or 3 channels, got {c}")
    w = Tensor(np.asarray(GRAY_WEIGHTS).reshape(1, 3, 1, 1))
    return ops.conv2d(x, w)


class Discriminator(Module):
    def __init__(self, spatial: SpatialPath, frequency: FrequencyPath | None, heads: Heads):
        self.spatial = spatial
        self.frequency = frequency
        self.heads = heads

    @property
    def freq_enabled(self) -> bool:
        return self.frequency is not None

    def features(self, x: Tensor):
        fx = self.spatial(x)
        ff = self.frequency(to_grayscale(x)) if self.frequency is not None else None
        return fx, ff

    def forward(self, x: Tensor):
        return self.heads(*self.features(x))


def build_generator(arch: str, rng: np.random.Generator, width_div: int = 8,
                    latent: int | None = None) -> Generator:
    return Generator(generator_spec(arch, width_div, latent), rng)


def build_discriminator_paths(arch: str, rng: np.random.Generator, width_div: int = 8,
                              freq_enabled: bool = True, pooling: bool | None = None,
                              final_relu: bool = True):
    """(spatial path, frequency path or None, heads) for an arch tag."""
    spec = discriminator_spec(arch, width_div)
    spatial = SpatialPath(spec, rng)
    freq = FrequencyPath(spec, rng, pooling, final_relu) if freq_enabled else None
    heads = Heads(spec.spatial_features, spec.freq_features if freq_enabled else None, rng)
    return spatial, freq, heads


def build_discriminator(arch: str, rng: np.random.Generator, width_div: int = 8,
                        freq_enabled: bool = True, pooling: bool | None = None,
                        final_relu: bool = True) -> Discriminator:
    return Discriminator(*build_discriminator_paths(arch, rng, width_div, freq_enabled,
                                                    pooling, final_relu))
