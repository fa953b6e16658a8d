import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from freqgan.errors import ContractError, PadRequiredError, ShapeError
from freqgan.spectral import (
    RadialProfile, Spectrum, amplitude_gap_2d, azimuthal_integral, dft1, dft2, fft2_unitary, fftshift,
    grayscale, high_frequency_mean, idft1, idft2, ifft2_unitary, log_amplitude_image, power_spectrum,
    principal_phase, psd_distance, radial_bin_counts, radial_bins, write_gap_csv, write_profile_csv,
    zero_insert_upsample,
)
from oracles import naive_dft, naive_dft2, naive_radial


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12, 16, 31, 32])
def test_dft1_matches_double_sum(n, rng):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.max(np.abs(dft1(x) - naive_dft(x))) < 1e-10
    assert np.max(np.abs(idft1(dft1(x)) - x)) < 1e-12


def test_fft2_matches_double_sum(rng):
    x = rng.standard_normal((16, 16))
    assert np.max(np.abs(fft2_unitary(x) - naive_dft2(x))) < 1e-10
    y = rng.standard_normal((4, 8))
    assert np.max(np.abs(fft2_unitary(y) - naive_dft2(y))) < 1e-10


def test_dc_cell_is_mean_times_sqrt_size(rng):
    x = rng.standard_normal((8, 8))
    assert fft2_unitary(x)[0, 0].real == pytest.approx(x.sum() / 8)


def test_fft2_batched(rng):
    x = rng.standard_normal((3, 2, 8, 8))
    z = fft2_unitary(x)
    assert np.allclose(z[1, 1], fft2_unitary(x[1, 1]))
    assert np.allclose(ifft2_unitary(z).real, x)


def test_pad_required():
    with pytest.raises(PadRequiredError):
        fft2_unitary(np.zeros((12, 16)))
    with pytest.raises(ShapeError):
        fft2_unitary(np.zeros(8))
    with pytest.raises(ShapeError):
        dft1(np.zeros(0))


def test_principal_phase_interval():
    z = np.array([-1 + 0j, -1 - 0j, 1j, -1j, 1.0])
    ph = principal_phase(z)
    assert np.all(ph > -np.pi) and np.all(ph <= np.pi)
    assert ph[0] == pytest.approx(np.pi) and ph[1] == pytest.approx(np.pi)


def test_spectrum_round_trip(rng):
    x = rng.standard_normal((8, 16))
    s = dft2(x)
    assert (s.height, s.width, s.centered) == (8, 16, False)
    back, imag = idft2(s)
    assert np.allclose(back, x, atol=1e-12) and imag < 1e-12
    back_c, _ = idft2(fftshift(s))
    assert np.allclose(back_c, x, atol=1e-12)


def test_fftshift_moves_dc_to_center(rng):
    x = rng.standard_normal((8, 8)) + 3
    c = fftshift(dft2(x))
    assert c.centered
    assert np.argmax(c.amplitude) == 4 * 8 + 4
    assert np.array_equal(fftshift(c).amplitude, dft2(x).amplitude)


def test_scaled_amplitude_only(rng):
    s = dft2(rng.standard_normal((4, 4)))
    t = s.scaled(2.0)
    assert np.allclose(t.amplitude, 2 * s.amplitude) and np.array_equal(t.phase, s.phase)


def test_radial_bins_layout():
    r, n = radial_bins(8, 8)
    assert n == 4
    assert r[4, 4] == 0 and r[4, 5] == 1 and r[5, 5] == 1 and r[6, 6] == 3 and r[0, 0] == -1
    counts = radial_bin_counts(8, 8)
    assert counts[0] == 1 and counts[1] == 8
    assert counts.sum() == (r >= 0).sum()


@pytest.mark.parametrize("shape", [(8, 8), (16, 16), (8, 16)])
def test_radial_reductions_match_loop_oracle(shape, rng):
    x = rng.standard_normal(shape)
    s = dft2(x)
    amp = fftshift(s).amplitude
    assert np.allclose(power_spectrum(s).values, naive_radial(amp, "mean"))
    assert np.allclose(azimuthal_integral(s).values, naive_radial(amp ** 2, "sum"))


def test_radial_profile_batched(rng):
    x = rng.standard_normal((5, 8, 8))
    ps = power_spectrum(dft2(x))
    assert ps.values.shape == (5, 4)
    assert np.allclose(ps.values[2], power_spectrum(dft2(x[2])).values)


def test_constant_image_power_only_at_dc():
    ps = power_spectrum(dft2(np.full((8, 8), 2.0)))
    assert ps.values[0] == pytest.approx(16.0)
    assert np.allclose(ps.values[1:], 0.0)


def test_psd_distance_examples():
    real = [np.array([2.0, 4.0, 0.0]), np.array([2.0, 4.0, 0.0])]
    fake = [np.array([1.0, 5.0, 3.0])]
    d = psd_distance(real, fake)
    assert np.allclose(d.values, [0.5, 0.25, 0.0])
    assert d.mask.tolist() == [False, False, True]
    assert np.allclose(psd_distance(real, real).values, 0.0)


def test_psd_distance_accepts_profiles_and_arrays(rng):
    rows = np.abs(rng.standard_normal((4, 6))) + 0.1
    profiles = [RadialProfile(np.arange(6.0), r, np.zeros(6, bool)) for r in rows]
    assert np.allclose(psd_distance(profiles, rows[:2]).values, psd_distance(rows, rows[:2]).values)


def test_psd_distance_layout_errors():
    with pytest.raises(ShapeError):
        psd_distance([np.ones(3)], [np.ones(4)])
    with pytest.raises(ContractError):
        psd_distance([], [np.ones(3)])


def test_amplitude_gap_masks_zero_cells():
    real = [np.array([[1.0, 0.0], [2.0, 4.0]])]
    fake = [np.array([[2.0, 1.0], [2.0, 3.0]])]
    g = amplitude_gap_2d(real, fake)
    assert np.allclose(g.values, [[1.0, 0.0], [0.0, 0.25]])
    assert g.mask.tolist() == [[False, True], [False, False]]


def test_high_frequency_mean():
    p = RadialProfile(np.arange(8.0), np.arange(8.0), np.zeros(8, bool))
    assert high_frequency_mean(p) == pytest.approx(6.5)
    p.mask[7] = True
    assert high_frequency_mean(p) == pytest.approx(6.0)


@pytest.mark.parametrize("n", [4, 8, 16, 32])
@pytest.mark.parametrize("m", [2, 3])
def test_zero_insertion_replicates_spectrum(n, m, rng):
    x = rng.standard_normal(n)
    Xu = dft1(zero_insert_upsample(x, m))
    expect = dft1(x)[np.arange(n * m) % n] / np.sqrt(m)
    assert np.max(np.abs(Xu - expect)) < 1e-9


def test_zero_insertion_2d_tiles_spectrum(rng):
    x = rng.standard_normal((8, 8))
    up = zero_insert_upsample(x, 2)
    assert up.shape == (16, 16) and np.array_equal(up[::2, ::2], x)
    assert np.allclose(fft2_unitary(up), np.tile(fft2_unitary(x), (2, 2)) / 2)


def test_zero_insertion_bad_factor():
    with pytest.raises(ContractError):
        zero_insert_upsample(np.ones(4), 1)
    with pytest.raises(ContractError):
        zero_insert_upsample(np.ones(4), 2.5)


def test_grayscale():
    x = np.stack([np.full((2, 2), 1.0), np.zeros((2, 2)), np.zeros((2, 2))])
    assert np.allclose(grayscale(x), 0.299)
    assert grayscale(np.ones((1, 2, 2))).shape == (1, 2, 2)
    with pytest.raises(ShapeError):
        grayscale(np.ones((2, 2, 2)))
    with pytest.raises(ShapeError):
        grayscale(np.ones((4, 4)))


def test_log_amplitude_image(rng):
    img = log_amplitude_image(dft2(rng.standard_normal((8, 8)) + 1))
    assert img.dtype == np.uint8 and img.shape == (8, 8)
    assert img.max() == 255 and img.min() == 0
    assert np.argmax(img) == 4 * 8 + 4
    assert not log_amplitude_image(dft2(np.zeros((4, 4)))).any()


def test_csv_exports(tmp_path):
    p = RadialProfile(np.arange(3.0), np.array([0.5, 0.25, 0.0]), np.array([False, False, True]))
    write_profile_csv(tmp_path / "p.csv", p)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "bin,center,value,mask" and lines[3] == "2,2.0,0.0,1"
    write_gap_csv(tmp_path / "g.csv", amplitude_gap_2d([np.ones((2, 2))], [np.ones((2, 2))]))
    assert len((tmp_path / "g.csv").read_text().splitlines()) == 5
    with pytest.raises(ShapeError):
        write_profile_csv(tmp_path / "bad.csv", RadialProfile(np.arange(2.0), np.ones((2, 2)),
                                                              np.zeros(2, bool)))


finite = st.floats(-1e3, 1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.sampled_from([1, 2, 4, 7, 16, 32]), elements=finite))
def test_dft1_is_unitary(x):
    assert np.linalg.norm(dft1(x)) == pytest.approx(np.linalg.norm(x), rel=1e-10, abs=1e-9)
    assert np.allclose(idft1(dft1(x)).real, x, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (8, 8), elements=finite), st.integers(0, 7), st.integers(0, 7))
def test_shift_leaves_amplitude_and_power_spectrum(x, a, b):
    s, t = dft2(x), dft2(np.roll(x, (a, b), axis=(0, 1)))
    assert np.allclose(s.amplitude, t.amplitude, atol=1e-8)
    assert np.allclose(power_spectrum(s).values, power_spectrum(t).values, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (8, 8), elements=finite))
def test_azimuthal_integral_bounded_by_energy(x):
    total = azimuthal_integral(dft2(x)).values.sum()
    assert total <= np.sum(x * x) * (1 + 1e-12) + 1e-9


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (4, 8, 8), elements=st.floats(0.1, 10)))
def test_psd_distance_nonnegative_and_zero_on_self(x):
    ps = power_spectrum(dft2(x)).values
    assert np.all(psd_distance(ps, ps).values == 0)
    assert np.all(psd_distance(ps, ps[:2]).values >= 0)


def test_spectrum_phase_wrap_matches_numpy(rng):
    x = rng.standard_normal((8, 8))
    s = dft2(x)
    assert isinstance(s, Spectrum)
    assert np.allclose(s.to_complex(), np.fft.fft2(x) / 8)
