"""Unitary discrete Fourier transforms and spectrum statistics.

Both directions carry a ``1/sqrt(N)`` factor per axis, so a square ``N×N``
image picks up ``1/N`` on the way in and ``1/N`` on the way out, and the
transform preserves inner products. Power-of-two lengths use an iterative
radix-2 Cooley-Tukey kernel; other 1D lengths fall back to the direct sum.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from freqgan.errors import ContractError, PadRequiredError, ShapeError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=None)
def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(m: int, sign: int) -> np.ndarray:
    return np.exp(sign * 2j * np.pi * np.arange(m) / (2 * m))


@lru_cache(maxsize=None)
def _dft_matrix(n: int, sign: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / n)


def _fft_last_axis(x: np.ndarray, sign: int) -> np.ndarray:
    """Unnormalized transform along the last axis; ``sign=-1`` is forward."""
    n = x.shape[-1]
    if not is_power_of_two(n):
        return x.astype(np.complex128) @ _dft_matrix(n, sign).T
    lead = x.shape[:-1]
    y = x[..., _bit_reverse(n)].astype(np.complex128)
    m = 1
    while m < n:
        y = y.reshape(lead + (n // (2 * m), 2, m))
        even = y[..., 0, :]
        odd = y[..., 1, :] * _twiddles(m, sign)
        y = np.concatenate((even + odd, even - odd), axis=-1)
        m *= 2
    return y.reshape(lead + (n,))


def dft1(x) -> np.ndarray:
    """Unitary 1D DFT along the last axis."""
    x = np.asarray(x)
    if x.shape[-1] < 1:
        raise ShapeError("dft1 needs at least one sample")
    return _fft_last_axis(x, -1) / np.sqrt(x.shape[-1])


def idft1(X) -> np.ndarray:
    X = np.asarray(X)
    return _fft_last_axis(X, +1) / np.sqrt(X.shape[-1])


def _check_pow2_plane(shape) -> tuple[int, int]:
    if len(shape) < 2:
        raise ShapeError(f"2D transform needs at least two axes, got shape {shape}")
    H, W = shape[-2], shape[-1]
    if not (is_power_of_two(H) and is_power_of_two(W)):
        raise PadRequiredError(f"extents {H}×{W} are not powers of two; zero-pad first")
    return H, W


def fft2_unitary(x) -> np.ndarray:
    """Complex unitary 2D DFT over the last two axes."""
    x = np.asarray(x)
    H, W = _check_pow2_plane(x.shape)
    rows = _fft_last_axis(x, -1)
    cols = _fft_last_axis(np.swapaxes(rows, -1, -2), -1)
    return np.swapaxes(cols, -1, -2) / np.sqrt(H * W)


def ifft2_unitary(z) -> np.ndarray:
    z = np.asarray(z)
    H, W = _check_pow2_plane(z.shape)
    rows = _fft_last_axis(z, +1)
    cols = _fft_last_axis(np.swapaxes(rows, -1, -2), +1)
    return np.swapaxes(cols, -1, -2) / np.sqrt(H * W)


def principal_phase(z: np.ndarray) -> np.ndarray:
    """Argument mapped to (-pi, pi]."""
    phase = np.angle(z)
    phase[phase <= -np.pi] = np.pi
    return phase


@dataclass
class Spectrum:
    """A 2D spectrum held as amplitude and phase planes (``[..., H, W]``)."""

    amplitude: np.ndarray
    phase: np.ndarray
    height: int
    width: int
    centered: bool = False
    convention: str = "unitary"

    @classmethod
    def from_complex(cls, z: np.ndarray, centered: bool = False) -> "Spectrum":
        z = np.asarray(z, dtype=np.complex128)
        return cls(np.abs(z), principal_phase(z), z.shape[-2], z.shape[-1], centered)

    def to_complex(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)

    def scaled(self, factor: float) -> "Spectrum":
        return Spectrum(self.amplitude * factor, self.phase.copy(), self.height, self.width,
                        self.centered, self.convention)


def dft2(x) -> Spectrum:
    """Unitary 2D DFT of a real ``H×W`` (or ``...×H×W``) array."""
    return Spectrum.from_complex(fft2_unitary(x))


def idft2(s: Spectrum) -> tuple[np.ndarray, float]:
    """Inverse transform; returns the real part and max |imaginary part|.

    A centered spectrum is un-shifted before inversion.
    """
    if s.centered:
        s = fftshift(s)
    z = ifft2_unitary(s.to_complex())
    return z.real.copy(), float(np.max(np.abs(z.imag))) if z.size else 0.0


def fftshift(s: Spectrum) -> Spectrum:
    """Cyclic half-shift on both axes; toggles the ``centered`` flag.

    For even extents this is its own inverse.
    """
    shift = (s.height // 2, s.width // 2)
    if s.centered:
        shift = (-shift[0], -shift[1])
    amp = np.roll(s.amplitude, shift, axis=(-2, -1))
    ph = np.roll(s.phase, shift, axis=(-2, -1))
    return Spectrum(amp, ph, s.height, s.width, not s.centered, s.convention)


# ---------------------------------------------------------------- radial statistics

@dataclass
class RadialProfile:
    """One value per integer radius bin; ``mask`` marks empty/invalid bins."""

    bin_centers: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    bin_policy: str = "nearest-integer-radius"

    def __len__(self) -> int:
        return len(self.bin_centers)


def radial_bins(height: int, width: int) -> tuple[np.ndarray, int]:
    """Integer radius (from the centered DC cell) for every cell, and bin count.

    Radii are measured from ``(H//2, W//2)`` and rounded to the nearest
    integer; only bins ``0 .. min(H, W)/2 - 1`` are kept, everything beyond
    is labelled ``-1``.
    """
    n_bins = min(height, width) // 2
    i = np.arange(height)[:, None] - height // 2
    j = np.arange(width)[None, :] - width // 2
    r = np.rint(np.sqrt(i * i + j * j)).astype(np.intp)
    r[r >= n_bins] = -1
    return r, n_bins


def _centered_amplitude(s: Spectrum) -> np.ndarray:
    return s.amplitude if s.centered else fftshift(s).amplitude


def _radial_reduce(plane: np.ndarray, height: int, width: int, mode: str) -> RadialProfile:
    r, n_bins = radial_bins(height, width)
    keep = r >= 0
    flat = plane.reshape(plane.shape[:-2] + (-1,))[..., keep.ravel()]
    labels = r[keep]
    counts = np.bincount(labels, minlength=n_bins)
    sums = np.zeros(plane.shape[:-2] + (n_bins,))
    np.add.at(sums, (..., labels), flat)
    empty = counts == 0
    if mode == "mean":
        values = np.where(empty, 0.0, sums / np.maximum(counts, 1))
    else:
        values = np.where(empty, 0.0, sums)
    return RadialProfile(np.arange(n_bins, dtype=np.float64), values, empty)


def power_spectrum(s: Spectrum) -> RadialProfile:
    """Mean amplitude per integer radius bin, measured from the DC cell."""
    return _radial_reduce(_centered_amplitude(s), s.height, s.width, "mean")


def azimuthal_integral(s: Spectrum) -> RadialProfile:
    """Sum of squared amplitude per integer radius bin."""
    amp = _centered_amplitude(s)
    return _radial_reduce(amp * amp, s.height, s.width, "sum")


def radial_bin_counts(height: int, width: int) -> np.ndarray:
    r, n_bins = radial_bins(height, width)
    return np.bincount(r[r >= 0], minlength=n_bins)


def _stack_values(items: Iterable) -> np.ndarray:
    arrays = [np.asarray(p.values if isinstance(p, RadialProfile) else p, dtype=np.float64)
              for p in items]
    if not arrays:
        raise ContractError("need a non-empty set of profiles")
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"mismatched layouts: {sorted(shapes)}")
    return np.stack(arrays)


def _normalized_gap(real: np.ndarray, fake: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if real.shape[1:] != fake.shape[1:]:
        raise ShapeError(f"real layout {real.shape[1:]} != fake layout {fake.shape[1:]}")
    mr, mf = real.mean(axis=0), fake.mean(axis=0)
    invalid = mr == 0
    gap = np.abs(mr - mf) / np.where(invalid, 1.0, mr)
    gap[invalid] = 0.0
    return gap, invalid


def psd_distance(real_profiles, fake_profiles) -> RadialProfile:
    """|E[PS(real)] - E[PS(fake)]| / E[PS(real)] per bin.

    Bins whose real mean is zero are set to 0 and flagged in ``mask``.
    """
    real = _stack_values(real_profiles)
    fake = _stack_values(fake_profiles)
    gap, invalid = _normalized_gap(real, fake)
    return RadialProfile(np.arange(gap.shape[-1], dtype=np.float64), gap, invalid)


@dataclass
class AmplitudeGap:
    values: np.ndarray
    mask: np.ndarray


def amplitude_gap_2d(real_amps, fake_amps) -> AmplitudeGap:
    """Per-cell |E[A_real] - E[A_fake]| / E[A_real]; zero-mean cells flagged."""
    real = _stack_values(real_amps)
    fake = _stack_values(fake_amps)
    gap, invalid = _normalized_gap(real, fake)
    return AmplitudeGap(gap, invalid)


def high_frequency_mean(profile: RadialProfile, fraction: float = 0.25) -> float:
    """Mean over the unmasked bins in the top ``fraction`` of radii."""
    n = len(profile)
    start = n - max(1, int(round(n * fraction)))
    values = profile.values[..., start:]
    valid = ~profile.mask[start:]
    return float(values[..., valid].mean())


# ---------------------------------------------------------------- image helpers

def zero_insert_upsample(x, m: int = 2) -> np.ndarray:
    """Place ``x`` on every m-th sample (both axes for 2D+), zeros elsewhere."""
    if int(m) != m or m < 2:
        raise ContractError(f"upsampling factor must be an integer >= 2, got {m}")
    x = np.asarray(x)
    if x.ndim == 1:
        out = np.zeros(x.shape[0] * m, dtype=x.dtype)
        out[::m] = x
        return out
    out = np.zeros(x.shape[:-2] + (x.shape[-2] * m, x.shape[-1] * m), dtype=x.dtype)
    out[..., ::m, ::m] = x
    return out


def grayscale(x) -> np.ndarray:
    """Luminance of a ``3×H×W`` image (``1×H×W`` passes through)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 3:
        raise ShapeError(f"grayscale expects C×H×W, got {x.shape}")
    c = x.shape[-3]
    if c == 1:
        return x.copy()
    if c != 3:
        raise ShapeError(f"grayscale expects 1 or 3 channels, got {c}")
    r, g, b = LUMA_WEIGHTS
    return (r * x[..., 0:1, :, :] + g * x[..., 1:2, :, :] + b * x[..., 2:3, :, :])


def log_amplitude_image(s: Spectrum) -> np.ndarray:
    """8-bit image of log(1 + amplitude), DC-centered, min-max scaled."""
    amp = _centered_amplitude(s)
    if amp.ndim > 2:
        amp = amp.reshape(-1, s.height, s.width)[0]
    v = np.log1p(amp)
    lo, hi = v.min(), v.max()
    scaled = np.zeros_like(v) if hi == lo else (v - lo) / (hi - lo)
    return np.round(scaled * 255).astype(np.uint8)


def write_profile_csv(path, profile: RadialProfile) -> None:
    values = np.asarray(profile.values)
    if values.ndim != 1:
        raise ShapeError("CSV export expects a single 1D profile")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "center", "value", "mask"])
        for b, (c, v, m) in enumerate(zip(profile.bin_centers, values, profile.mask)):
            w.writerow([b, repr(float(c)), repr(float(v)), int(bool(m))])


def write_gap_csv(path, gap: AmplitudeGap) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "value", "mask"])
        for (i, j), v in np.ndenumerate(gap.values):
            w.writerow([i, j, repr(float(v)), int(bool(gap.mask[i, j]))])
