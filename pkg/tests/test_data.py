import numpy as np
import pytest

from freqgan.data import (
    Dataset, image_grid, load_cifar_binary, load_dataset, load_pgm_dir, read_pgm, synth_textures,
    texture_amplitude, to_uint8, from_uint8, write_cifar_binary, write_pgm,
)
from freqgan.errors import ConfigError, FormatError, ShapeError
from freqgan.spectral import azimuthal_integral, dft2, radial_bin_counts


def _cifar_fixture(tmp_path, n=3, variant="cifar100", rng=None):
    rng = rng or np.random.default_rng(0)
    pixels = rng.integers(0, 256, (n, 3, 32, 32), dtype=np.uint8)
    labels = rng.integers(0, 100, (n, 2 if variant == "cifar100" else 1))
    path = tmp_path / "data_batch.bin"
    write_cifar_binary(path, pixels, labels)
    return path, pixels, labels


@pytest.mark.parametrize("variant,record", [("cifar100", 3074), ("cifar10", 3073)])
def test_cifar_round_trip(tmp_path, variant, record):
    path, pixels, labels = _cifar_fixture(tmp_path, variant=variant)
    assert path.stat().st_size == 3 * record
    ds = load_cifar_binary(path, variant)
    assert ds.images.shape == (3, 3, 32, 32)
    assert np.array_equal(to_uint8(ds.images), pixels)
    assert np.array_equal(ds.labels, labels)
    assert ds.images.min() >= -1 and ds.images.max() <= 1


def test_cifar_first_record_layout(tmp_path):
    raw = np.zeros(3074, dtype=np.uint8)
    raw[0], raw[1] = 7, 42
    raw[2] = 255                     # red channel, pixel (0, 0)
    raw[2 + 1024 + 33] = 255         # green channel, pixel (1, 1)
    raw.tofile(tmp_path / "one.bin")
    ds = load_cifar_binary(tmp_path / "one.bin")
    assert ds.labels.tolist() == [[7, 42]]
    assert ds.images[0, 0, 0, 0] == 1.0 and ds.images[0, 1, 1, 1] == 1.0
    assert ds.images[0, 2].max() == -1.0


def test_cifar_truncated(tmp_path):
    path, _, _ = _cifar_fixture(tmp_path)
    path.write_bytes(path.read_bytes()[:-100])
    with pytest.raises(FormatError, match="offset 6148"):
        load_cifar_binary(path)


def test_cifar_directory_and_kind(tmp_path):
    _cifar_fixture(tmp_path)
    ds = load_dataset({"kind": "cifar100-binary", "path": str(tmp_path)}, 32)
    assert len(ds) == 3 and ds.kind == "cifar100-binary"
    with pytest.raises(ConfigError):
        load_dataset({"kind": "cifar100-binary", "path": str(tmp_path)}, 16)
    with pytest.raises(ConfigError):
        load_cifar_binary(tmp_path, "cifar1000")


def test_pgm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, (5, 7), dtype=np.uint8)
    write_pgm(tmp_path / "a.pgm", img)
    assert (tmp_path / "a.pgm").stat().st_size == len(b"P5\n7 5\n255\n") + 35
    assert np.array_equal(read_pgm(tmp_path / "a.pgm"), img)


def test_pgm_with_comments(tmp_path):
    body = bytes(range(6))
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n3 2\n# max\n255\n" + body)
    assert read_pgm(tmp_path / "c.pgm").tolist() == [[0, 1, 2], [3, 4, 5]]


def test_pgm_errors(tmp_path):
    (tmp_path / "p2.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "p2.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n2 2\n255\n\x00")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "short.pgm")
    (tmp_path / "deep.pgm").write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "deep.pgm")
    (tmp_path / "junk.pgm").write_bytes(b"P5 what")
    with pytest.raises(FormatError):
        read_pgm(tmp_path / "junk.pgm")
    with pytest.raises(ShapeError):
        write_pgm(tmp_path / "x.pgm", np.zeros((2, 2)))


def test_pgm_directory(tmp_path, rng):
    for i in range(3):
        write_pgm(tmp_path / f"{i}.pgm", rng.integers(0, 256, (4, 4), dtype=np.uint8))
    ds = load_pgm_dir(tmp_path)
    assert ds.images.shape == (3, 1, 4, 4) and ds.meta["files"] == ["0.pgm", "1.pgm", "2.pgm"]
    write_pgm(tmp_path / "odd.pgm", np.zeros((2, 2), np.uint8))
    with pytest.raises(ShapeError):
        load_pgm_dir(tmp_path)
    with pytest.raises(ConfigError):
        load_pgm_dir(tmp_path / "missing")


def test_uint8_conversions():
    x = np.array([-1.0, 0.0, 1.0, 2.0])
    assert to_uint8(x).tolist() == [0, 128, 255, 255]
    assert from_uint8(np.array([0, 255])).tolist() == [-1.0, 1.0]


def test_image_grid():
    imgs = np.stack([np.full((1, 2, 2), float(i)) for i in range(3)])
    g = image_grid(imgs)
    assert g.shape == (4, 4)
    assert g[0, 2] == 1.0 and g[2, 0] == 2.0 and g[3, 3] == -1.0


def test_dataset_validation():
    with pytest.raises(ShapeError):
        Dataset("x", np.zeros((2, 4, 4)))
    with pytest.raises(ShapeError):
        Dataset("x", np.full((1, 1, 2, 2), 2.0))


def test_batches_deterministic_and_full():
    ds = synth_textures(10, size=8, seed=0)
    a, b = ds.batches(4, seed=9), ds.batches(4, seed=9)
    for _ in range(6):
        x, y = next(a), next(b)
        assert x.shape == (4, 1, 8, 8) and np.array_equal(x, y)
    assert np.array_equal(ds.permutation(3), ds.permutation(3))
    with pytest.raises(ConfigError):
        next(ds.batches(0, 1))


def test_synthetic_textures_reproducible():
    a, b = synth_textures(6, seed=4), synth_textures(6, seed=4)
    assert np.array_equal(a.images, b.images)
    assert not np.array_equal(a.images, synth_textures(6, seed=5).images)
    assert a.labels.tolist() == [0, 1, 0, 1, 0, 1]
    assert np.allclose(np.abs(a.images).max(axis=(1, 2, 3)), 1.0)


def test_synthetic_power_law_slope():
    ds = synth_textures(200, size=16, classes=[{"alpha": 2.0}], seed=0, normalize=False)
    power = azimuthal_integral(dft2(ds.images[:, 0])).values.mean(axis=0)
    per_cell = power / radial_bin_counts(16, 16)
    r = np.arange(1, 8)
    slope = np.polyfit(np.log1p(r), np.log(per_cell[1:]), 1)[0]
    assert abs(slope + 4.0) < 0.3


def test_texture_amplitude_symmetric():
    a = texture_amplitude(8, 1.5, orientation=0.4)
    flipped = np.roll(a[::-1, ::-1], 1, axis=(0, 1))
    keep = np.ones((8, 8), bool)
    keep[4, :] = keep[:, 4] = False      # -k of the Nyquist row is not on the grid
    assert np.allclose(a[keep], flipped[keep])
    assert texture_amplitude(8, 1.0)[0, 0] == 1.0


def test_synthetic_errors():
    with pytest.raises(ConfigError):
        synth_textures(4, size=12)
    with pytest.raises(ConfigError):
        synth_textures(4, classes=[{"alpha": -1.0}])
    with pytest.raises(ConfigError):
        load_dataset({"kind": "synthetic", "colour": True})
    with pytest.raises(ConfigError):
        load_dataset({"kind": "pgm-dir"})
    with pytest.raises(ConfigError):
        load_dataset({"kind": "webdataset", "path": "."})
    assert len(synth_textures(0)) == 0
