"""Shift-equivariant frequency-domain layer.

One layer transforms the spectrum of a ``B×1×H×W`` input like this:

1. Unitary 2D DFT, split into amplitude and phase.
2. The amplitude runs through SN residual blocks (ordinary convolutions
   over the frequency plane).
3. Optionally the amplitude is max-pooled and the phase is gathered at the
   same per-channel argmax positions.
4. The single-channel phase is attached to every amplitude channel.
5. An inverse DFT maps back to space, and the real part is kept.

A cyclic shift of the input multiplies every spectral cell by a unit-modulus
factor and leaves the amplitude untouched. The amplitude path therefore sees
the same input, the carried phase picks up the same factors, and the inverse
transform shifts back. With pooling off the layer commutes exactly with
cyclic shifts.

Phase is carried data, not a differentiable quantity. The amplitude is
differentiable with respect to the input image, so the generator still
receives gradient from this path.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from freqgan.errors import ContractError, PadRequiredError, ShapeError
from freqgan.nn.layers import Module, ResBlock, set_power_iteration
from freqgan.spectral import (_fft_last_axis, fft2_unitary, ifft2_unitary, is_power_of_two,
                              principal_phase)
from freqgan.tensor import Tensor, no_grad, ops
from freqgan.tensor.core import make_result


def _check_extent(H: int, W: int, allow_direct: bool) -> None:
    if not allow_direct and not (is_power_of_two(H) and is_power_of_two(W)):
        raise PadRequiredError(f"EV-Freq needs power-of-two extents, got {H}×{W}")


def spectral_split(x: Tensor, allow_direct: bool = False) -> tuple[Tensor, np.ndarray]:
    """Amplitude (differentiable) and phase (constant) of the unitary DFT of ``x``.

    d|F|/dx is Re(IDFT(g · e^{i·phase})). At zero-amplitude cells the unit
    phasor is taken as 0.
    """
    H, W = x.shape[-2:]
    _check_extent(H, W, allow_direct)
    z = _fft2(x.data, allow_direct)
    amp = np.abs(z)
    phase = principal_phase(z)
    unit = np.divide(z, amp, out=np.zeros_like(z), where=amp > 0)

    def backward(g):
        return (_ifft2(g * unit, allow_direct).real,)

    return make_result(amp, (x,), backward), phase


def phase_gather(phase: np.ndarray, indices: np.ndarray) -> np.ndarray:
    """Pick phase values at flat H×W positions, per channel.

    ``phase`` is ``B×1×H×W`` (or ``1×H×W``), ``indices`` is ``B×C×H'×W'``
    (or ``C×H'×W'``). The single phase channel is broadcast to all C.
    """
    squeeze = phase.ndim == 3
    if squeeze:
        phase, indices = phase[None], indices[None]
    if phase.ndim != 4 or phase.shape[1] != 1 or indices.ndim != 4:
        raise ShapeError(f"phase_gather: bad shapes {phase.shape}, {indices.shape}")
    B, _, H, W = phase.shape
    if indices.shape[0] != B:
        raise ShapeError("phase and index batch sizes differ")
    if indices.size and (indices.min() < 0 or indices.max() >= H * W):
        raise ContractError(f"pooling index out of range for a {H}×{W} plane")
    flat = phase.reshape(B, H * W)
    Bi, C, Ho, Wo = indices.shape
    out = np.take_along_axis(flat, indices.reshape(B, -1), axis=1).reshape(B, C, Ho, Wo)
    return out[0] if squeeze else out


def phase_attach_ifft(amplitude: Tensor, phase: np.ndarray,
                      allow_direct: bool = False) -> tuple[Tensor, float]:
    """Re(IDFT(amplitude · e^{i·phase})) and the largest discarded imaginary part.

    Negative amplitudes are used as-is (a signed magnitude).
    """
    if amplitude.shape != phase.shape:
        raise ShapeError(f"amplitude {amplitude.shape} and phase {phase.shape} differ")
    H, W = amplitude.shape[-2:]
    _check_extent(H, W, allow_direct)
    phasor = np.exp(1j * phase)
    y = _ifft2(amplitude.data * phasor, allow_direct)
    imag = float(np.max(np.abs(y.imag))) if y.size else 0.0

    def backward(g):
        return ((_fft2(g, allow_direct) * phasor.conj()).real,)

    return make_result(y.real.copy(), (amplitude,), backward), imag


def _fft2(x, allow_direct):
    if allow_direct:
        H, W = x.shape[-2:]
        rows = _fft_last_axis(x, -1)
        return np.swapaxes(_fft_last_axis(np.swapaxes(rows, -1, -2), -1), -1, -2) / np.sqrt(H * W)
    return fft2_unitary(x)


def _ifft2(z, allow_direct):
    if allow_direct:
        H, W = z.shape[-2:]
        rows = _fft_last_axis(z, +1)
        return np.swapaxes(_fft_last_axis(np.swapaxes(rows, -1, -2), +1), -1, -2) / np.sqrt(H * W)
    return ifft2_unitary(z)


class EVFreqLayer(Module):
    """DFT, amplitude residual blocks, optional max pool with phase gather, inverse DFT."""

    def __init__(self, blocks: list[ResBlock], pooling: bool = True, pool_k: int = 2,
                 pool_stride: int = 2, allow_direct_dft: bool = False):
        self.blocks = list(blocks)
        self.pooling = pooling
        self.pool_k, self.pool_stride = pool_k, pool_stride
        self.allow_direct_dft = allow_direct_dft
        self.last_imag_residual = 0.0

    @property
    def out_channels(self) -> int:
        return self.blocks[-1].c_out if self.blocks else 1

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim == 3:
            y = self.forward(ops.reshape(x, (1,) + x.shape))
            return ops.reshape(y, y.shape[1:])
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeError(f"EV-Freq takes a single-channel B×1×H×W input, got {x.shape}")
        amp, phase = spectral_split(x, self.allow_direct_dft)
        h = amp
        for block in self.blocks:
            h = block(h)
        if self.pooling:
            h, idx = ops.max_pool2d(h, self.pool_k, self.pool_stride)
            ph = phase_gather(phase, idx)
        else:
            ph = np.broadcast_to(phase, h.shape)
        out, imag = phase_attach_ifft(h, ph, self.allow_direct_dft)
        self.last_imag_residual = imag
        return out


def evfreq_forward(layer: EVFreqLayer, x: Tensor) -> Tensor:
    return layer(x)


@dataclass
class EquivarianceReport:
    pooling: bool
    trials: int
    shifts: int
    max_residual: float
    tolerance: float = 1e-6
    per_trial: list = field(default_factory=list)

    @property
    def asserted(self) -> bool:
        return not self.pooling

    @property
    def passed(self) -> bool | None:
        """True/False when asserted (pooling off); None when only measured."""
        if self.pooling:
            return None
        return self.max_residual < self.tolerance


def check_shift_equivariance(layer, trials: int = 20, shifts=None, size: int = 16,
                             seed: int = 0, inputs=None) -> EquivarianceReport:
    """Compare layer(roll(x)) against roll(layer(x)) for every requested shift.

    ``layer`` may be an :class:`EVFreqLayer` (new random input per trial) or
    a factory ``rng -> EVFreqLayer`` (new weights *and* input per trial).
    With pooling the output grid is coarser by the pool stride, so only
    shifts divisible by the stride are compared, against the scaled shift.
    """
    rng = np.random.default_rng(seed)
    if shifts is None:
        shifts = [(a, b) for a in range(size) for b in range(size)]
    shifts = list(shifts)
    per_trial = []
    pooling = None
    for t in range(trials):
        net = layer(rng) if callable(layer) and not isinstance(layer, Module) else layer
        pooling = net.pooling
        step = net.pool_stride if net.pooling else 1
        usable = [(a, b) for a, b in shifts if a % step == 0 and b % step == 0]
        x = rng.standard_normal((1, 1, size, size)) if inputs is None else inputs[t % len(inputs)]
        batch = np.concatenate([x] + [np.roll(x, s, axis=(-2, -1)) for s in usable])
        set_power_iteration(net, False)
        try:
            with no_grad():
                y = net(Tensor(batch)).data
        finally:
            set_power_iteration(net, True)
        base = y[0:1]
        worst = 0.0
        for i, (a, b) in enumerate(usable, start=1):
            expected = np.roll(base, (a // step, b // step), axis=(-2, -1))
            worst = max(worst, float(np.max(np.abs(y[i:i + 1] - expected))))
        per_trial.append(worst)
    return EquivarianceReport(bool(pooling), trials, len(shifts), max(per_trial, default=0.0),
                              per_trial=per_trial)
