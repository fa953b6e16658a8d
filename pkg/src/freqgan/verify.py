"""Self-checks bundled with the library (used by ``freqgan verify``)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from freqgan import symmetry
from freqgan.spectral import dft1, fft2_unitary, zero_insert_upsample


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tolerance: float
    passed: bool | None     # None: measured only

    def as_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "residual": float(self.residual),
                "tolerance": self.tolerance,
                "passed": None if self.passed is None else bool(self.passed)}


def direct_dft(x: np.ndarray, sign: int = -1) -> np.ndarray:
    """O(N^2) unitary DFT along the last axis (the reference for the fast path)."""
    n = x.shape[-1]
    k = np.arange(n)
    return x @ np.exp(sign * 2j * np.pi * np.outer(k, k) / n).T / np.sqrt(n)


def direct_dft2(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(direct_dft(np.swapaxes(direct_dft(x), -1, -2)), -1, -2)


def spectral_suite(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(1, 33):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        worst = max(worst, float(np.max(np.abs(dft1(x) - direct_dft(x)))))
    x2 = rng.standard_normal((16, 16))
    worst2 = float(np.max(np.abs(fft2_unitary(x2) - direct_dft2(x2))))

    parseval = 0.0
    for _ in range(100):
        a, b = rng.standard_normal(32), rng.standard_normal(32)
        parseval = max(parseval, abs(np.vdot(dft1(a), dft1(b)) - np.dot(a, b)))

    replication = 0.0
    for n in (4, 8, 16, 32):
        x = rng.standard_normal(n)
        X = dft1(x)
        for m in (2, 3):
            Xu = dft1(zero_insert_upsample(x, m))
            expect = X[np.arange(n * m) % n] / np.sqrt(m)
            replication = max(replication, float(np.max(np.abs(Xu - expect))))
    return [
        Check("spectral", "fast 1D DFT vs direct sum, N <= 32", worst, 1e-10, worst < 1e-10),
        Check("spectral", "fast 2D DFT vs direct sum, 16x16", worst2, 1e-10, worst2 < 1e-10),
        Check("spectral", "unitarity <Fx,Fy> = <x,y>", float(parseval), 1e-9, parseval < 1e-9),
        Check("spectral", "zero-insertion spectrum replication", replication, 1e-9,
              replication < 1e-9),
    ]


def symmetry_suite(seed: int = 0) -> list[Check]:
    return [Check("symmetry", f"{r.name} (n={r.n})", r.residual, r.tolerance, r.passed)
            for r in symmetry.run_all(seed=seed)]


def toy_evfreq_factory(channels: int = 8, pooling: bool = False):
    """rng -> EV-Freq layer with one SN residual block (1 -> channels)."""
    from freqgan.evfreq import EVFreqLayer
    from freqgan.nn.layers import ResBlock

    def make(rng):
        return EVFreqLayer([ResBlock(1, channels, rng)], pooling=pooling)
    return make


def evfreq_suite(trials: int = 20, size: int = 16, seed: int = 0) -> list[Check]:
    from freqgan.evfreq import check_shift_equivariance
    off = check_shift_equivariance(toy_evfreq_factory(pooling=False), trials, size=size, seed=seed)
    on = check_shift_equivariance(toy_evfreq_factory(pooling=True), trials, size=size, seed=seed)
    return [
        Check("evfreq", f"shift equivariance, pooling off ({trials} draws x {off.shifts} shifts)",
              off.max_residual, off.tolerance, off.passed),
        Check("evfreq", "shift equivariance, pooling on (measured)", on.max_residual,
              on.tolerance, None),
    ]


def run_all(trials: int = 20, seed: int = 0) -> list[Check]:
    return spectral_suite(seed) + symmetry_suite(seed) + evfreq_suite(trials, seed=seed)
