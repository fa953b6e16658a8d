import numpy as np
import pytest

from freqgan.errors import ContractError, PadRequiredError, ShapeError
from freqgan.evfreq import (
    EVFreqLayer, check_shift_equivariance, phase_attach_ifft, phase_gather, spectral_split,
)
from freqgan.nn import ResBlock, set_power_iteration
from freqgan.tensor import Tensor, backward, no_grad, ops
from freqgan.verify import toy_evfreq_factory
from gradcheck import check_gradients, check_module_gradients
from oracles import naive_gather, numeric_grad, rel_err


def test_empty_layer_is_identity(rng):
    x = rng.standard_normal((2, 1, 8, 8))
    layer = EVFreqLayer([], pooling=False)
    y = layer(Tensor(x)).data
    assert np.allclose(y, x, atol=1e-12)
    assert layer.last_imag_residual < 1e-12


def test_split_matches_numpy_reference(rng):
    x = rng.standard_normal((1, 1, 8, 8))
    amp, phase = spectral_split(Tensor(x))
    ref = np.fft.fft2(x) / 8
    assert np.allclose(amp.data, np.abs(ref))
    assert np.allclose(np.exp(1j * phase), np.exp(1j * np.angle(ref)))
    assert isinstance(phase, np.ndarray) and not isinstance(phase, Tensor)


def test_split_amplitude_gradient(rng):
    check_gradients(lambda t: spectral_split(t)[0], [rng.standard_normal((2, 1, 4, 4))], rng)


def test_attach_gradient(rng):
    phase = rng.uniform(-np.pi, np.pi, (2, 3, 4, 4))
    check_gradients(lambda a: phase_attach_ifft(a, phase)[0], [rng.standard_normal((2, 3, 4, 4))], rng)


def test_attach_shape_mismatch():
    with pytest.raises(ShapeError):
        phase_attach_ifft(Tensor(np.ones((1, 2, 4, 4))), np.zeros((1, 1, 4, 4)))


@pytest.mark.parametrize("pooling", [False, True])
def test_layer_parameter_gradients(pooling, rng):
    layer = EVFreqLayer([ResBlock(1, 3, rng)], pooling=pooling)
    x = Tensor(rng.standard_normal((1, 1, 8, 8)))
    set_power_iteration(layer, False)
    with no_grad():
        proj = Tensor(rng.standard_normal(layer(x).shape))
    check_module_gradients(layer, lambda: ops.sum(ops.mul(layer(x), proj)), rng)


@pytest.mark.parametrize("pooling", [False, True])
def test_layer_input_gradient_with_phase_held(pooling, rng):
    # phase is stop-gradient, so the reference derivative holds it at the
    # unperturbed value while the amplitude moves
    layer = EVFreqLayer([ResBlock(1, 3, rng)], pooling=pooling)
    set_power_iteration(layer, False)
    x0 = rng.standard_normal((1, 1, 8, 8))
    _, phase0 = spectral_split(Tensor(x0))

    def held(t):
        h, _ = spectral_split(t)
        h = layer.blocks[0](h)
        if pooling:
            h, idx = ops.max_pool2d(h, 2)
            ph = phase_gather(phase0, idx)
        else:
            ph = np.broadcast_to(phase0, h.shape)
        return phase_attach_ifft(h, ph)[0]

    x = Tensor(x0.copy(), requires_grad=True)
    y = layer(x)
    proj = rng.standard_normal(y.shape)
    backward(ops.sum(ops.mul(y, Tensor(proj))))
    probe = x0.copy()
    num = numeric_grad(lambda: float(np.sum(held(Tensor(probe)).data * proj)), probe)
    assert rel_err(x.grad, num) < 1e-4


def test_phase_gather_matches_loop(rng):
    phase = rng.uniform(-np.pi, np.pi, (1, 8, 8))
    idx = rng.integers(0, 64, (5, 4, 4))
    assert np.array_equal(phase_gather(phase, idx), naive_gather(phase, idx))
    batched = phase_gather(np.stack([phase, -phase]), np.stack([idx, idx]))
    assert np.array_equal(batched[1], -naive_gather(phase, idx))


def test_phase_gather_errors(rng):
    phase = np.zeros((1, 4, 4))
    with pytest.raises(ContractError):
        phase_gather(phase, np.full((2, 2, 2), 16))
    with pytest.raises(ContractError):
        phase_gather(phase, np.full((2, 2, 2), -1))
    with pytest.raises(ShapeError):
        phase_gather(np.zeros((1, 2, 4, 4)), np.zeros((1, 2, 2, 2), int))
    with pytest.raises(ShapeError):
        phase_gather(np.zeros((2, 1, 4, 4)), np.zeros((3, 2, 2, 2), int))


def test_pooled_phase_follows_amplitude_argmax(rng):
    layer = EVFreqLayer([ResBlock(1, 2, rng)], pooling=True)
    x = Tensor(rng.standard_normal((1, 1, 8, 8)))
    amp, phase = spectral_split(x)
    with no_grad():
        set_power_iteration(layer, False)
        h = layer.blocks[0](amp)
        pooled, idx = ops.max_pool2d(h, 2)
        y = layer(x).data
    ref = np.real(np.fft.ifft2(pooled.data * np.exp(1j * phase_gather(phase, idx)))) * 4
    assert np.allclose(y, ref, atol=1e-12)


def test_pooling_output_shape_unbatched(rng):
    layer = EVFreqLayer([ResBlock(1, 4, rng)], pooling=True)
    with no_grad():
        y = layer(Tensor(rng.standard_normal((1, 32, 32))))
    assert y.shape == (4, 16, 16)
    assert layer.out_channels == 4


def test_amplitude_path_ignores_phase(rng):
    x = rng.standard_normal((1, 1, 8, 8))
    a1, p1 = spectral_split(Tensor(x))
    a2, p2 = spectral_split(Tensor(-np.roll(x, (3, 5), axis=(-2, -1))))
    assert np.allclose(a1.data, a2.data)
    assert not np.allclose(p1, p2)


def test_phase_is_carried_not_differentiated(rng):
    # gradient only flows through the amplitude: perturbing the carried
    # phase changes the output but leaves the amplitude gradient path alone
    layer = EVFreqLayer([], pooling=False)
    x = Tensor(rng.standard_normal((1, 1, 4, 4)), requires_grad=True)
    backward(ops.sum(ops.mul(layer(x), Tensor(np.ones((1, 1, 4, 4))))))
    # identity layer: d sum(x)/dx = 1
    assert np.allclose(x.grad, 1.0)


def test_zero_input(rng):
    layer = EVFreqLayer([ResBlock(1, 2, rng)], pooling=False)
    with no_grad():
        y = layer(Tensor(np.zeros((1, 1, 8, 8)))).data
    assert np.allclose(y, 0.0) and layer.last_imag_residual == 0.0


def test_input_validation(rng):
    layer = EVFreqLayer([], pooling=False)
    with pytest.raises(PadRequiredError):
        layer(Tensor(np.zeros((1, 1, 12, 12))))
    with pytest.raises(ShapeError):
        layer(Tensor(np.zeros((1, 3, 8, 8))))


def test_direct_transform_on_non_power_of_two(rng):
    x = rng.standard_normal((1, 1, 12, 12))
    layer = EVFreqLayer([], pooling=False, allow_direct_dft=True)
    assert np.allclose(layer(Tensor(x)).data, x, atol=1e-12)


def test_shift_equivariance_pooling_off():
    r = check_shift_equivariance(toy_evfreq_factory(4, pooling=False), trials=3)
    assert r.shifts == 256 and r.asserted and r.passed
    assert r.max_residual < 1e-6


def test_shift_equivariance_non_power_of_two():
    def make(rng):
        return EVFreqLayer([ResBlock(1, 2, rng)], pooling=False, allow_direct_dft=True)
    r = check_shift_equivariance(make, trials=2, size=12)
    assert r.passed


def test_shift_equivariance_pooling_on_is_measured_only():
    r = check_shift_equivariance(toy_evfreq_factory(4, pooling=True), trials=2)
    assert not r.asserted and r.passed is None
    assert np.isfinite(r.max_residual)


def test_translation_invariant_block_breaks_equivariance_control(rng):
    # a layer that convolves the *input image* directly (zero padding) is not
    # cyclically equivariant; the check must be able to tell
    class Spatial(EVFreqLayer):
        def forward(self, x):
            return self.blocks[0](x)
    r = check_shift_equivariance(Spatial([ResBlock(1, 2, rng)], pooling=False), trials=1)
    assert r.passed is False
