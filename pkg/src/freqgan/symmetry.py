"""Dense-matrix checks of the shift-group facts behind the frequency layer.

Everything here is small (n <= 64) and exists to certify identities
numerically: circulant matrices commute with the cyclic shift, are
diagonalized by the Fourier basis, and therefore turn cyclic convolution
into a pointwise product of spectra.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from freqgan.errors import ShapeError
from freqgan.spectral import dft1


@dataclass
class CirculantSpec:
    """Circulant matrix C(theta) with entries theta[(u - v) mod n]."""

    generator: np.ndarray

    @property
    def n(self) -> int:
        return len(self.generator)

    def matrix(self) -> np.ndarray:
        n = self.n
        u = np.arange(n)[:, None]
        v = np.arange(n)[None, :]
        return np.asarray(self.generator)[(u - v) % n]


@dataclass
class FourierBasis:
    """Columns phi_k = (1, w^k, w^2k, ...)/sqrt(n) with w = exp(2*pi*i/n).

    ``matrix`` applied to a spectrum is the inverse DFT; its conjugate
    transpose applied to a signal is the forward (unitary) DFT.
    """

    n: int

    @property
    def matrix(self) -> np.ndarray:
        k = np.arange(self.n)
        return np.exp(2j * np.pi * np.outer(k, k) / self.n) / np.sqrt(self.n)

    @property
    def adjoint(self) -> np.ndarray:
        return self.matrix.conj().T


@dataclass
class VerificationReport:
    name: str
    n: int
    residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance and all(
            v for k, v in self.details.items() if k.startswith("check_"))


def circulant(theta) -> np.ndarray:
    return CirculantSpec(np.asarray(theta)).matrix()


def shift_matrix(n: int) -> np.ndarray:
    """Permutation moving every entry one slot right, cyclically."""
    if n < 2:
        raise ShapeError(f"shift matrix needs n >= 2, got {n}")
    theta = np.zeros(n)
    theta[1] = 1.0
    return circulant(theta)


def cyclic_convolve(x, theta) -> np.ndarray:
    """(x * theta)_u = sum_v x_v theta_{(u - v) mod n}."""
    x, theta = np.asarray(x), np.asarray(theta)
    if x.shape != theta.shape or x.ndim != 1:
        raise ShapeError(f"cyclic_convolve needs equal-length vectors, got {x.shape}, {theta.shape}")
    n = len(x)
    out = np.zeros(n, dtype=np.result_type(x, theta))
    for u in range(n):
        for v in range(n):
            out[u] += x[v] * theta[(u - v) % n]
    return out


def verify_commutation(theta, n: int | None = None, trials: int = 8,
                       rng: np.random.Generator | None = None, tol: float = 1e-12) -> VerificationReport:
    """Residual of S C(theta) x - C(theta) S x over random x.

    As a control, a circulant matrix with one perturbed entry must *fail* to
    commute (residual above 1e-3), which is recorded in ``details``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = len(theta) if n is None else n
    rng = np.random.default_rng(0) if rng is None else rng
    S, C = shift_matrix(n), circulant(theta)
    residual = 0.0
    for _ in range(trials):
        x = rng.standard_normal(n)
        residual = max(residual, float(np.max(np.abs(S @ (C @ x) - C @ (S @ x)))))
    residual = max(residual, float(np.max(np.abs(S @ C - C @ S))))
    broken = C.copy()
    broken[0, n - 1] += 0.5 + abs(broken[0, n - 1])
    control = float(np.max(np.abs(S @ broken - broken @ S)))
    return VerificationReport("shift commutation", n, residual, tol,
                              {"non_circulant_residual": control, "check_control": control > 1e-3})


def verify_convolution_theorem(theta, x, n: int | None = None, tol: float = 1e-10) -> VerificationReport:
    """Compare C(theta) x with Phi (sqrt(n) F(theta) ⊙ F(x)).

    F is the unitary DFT, so the eigenvalues of C(theta) are sqrt(n)·F(theta);
    the sqrt(n) disappears only under the unnormalized convention.
    """
    theta, x = np.asarray(theta, dtype=np.float64), np.asarray(x, dtype=np.float64)
    n = len(theta) if n is None else n
    phi = FourierBasis(n).matrix
    lhs = circulant(theta) @ x
    rhs = phi @ (np.sqrt(n) * dft1(theta) * dft1(x))
    direct = cyclic_convolve(x, theta)
    residual = float(max(np.max(np.abs(lhs - rhs)), np.max(np.abs(lhs - direct))))
    return VerificationReport("convolution theorem", n, residual, tol,
                              {"max_imag_rhs": float(np.max(np.abs(rhs.imag)))})


def shift_eigenvalues(n: int) -> np.ndarray:
    """Diagonal of Theta with Phi* S = Theta Phi*: exp(-2*pi*i*k/n)."""
    return np.exp(-2j * np.pi * np.arange(n) / n)


def verify_eigrelation(n: int, tol: float = 1e-10) -> VerificationReport:
    S = shift_matrix(n)
    adj = FourierBasis(n).adjoint
    theta = shift_eigenvalues(n)
    residual = float(np.max(np.abs(adj @ S - np.diag(theta) @ adj)))
    modulus_err = float(np.max(np.abs(np.abs(theta) - 1.0)))
    # independent route: eigenvalues of S straight from LAPACK
    eig = np.linalg.eigvals(S)
    matched = all(np.min(np.abs(eig - t)) < 1e-8 for t in theta)
    return VerificationReport("eigen-relation Phi*S = Theta Phi*", n, max(residual, modulus_err), tol,
                              {"modulus_error": modulus_err, "check_matches_eigvals": matched})


def verify_fourier_unitarity(n: int, tol: float = 1e-10) -> VerificationReport:
    phi = FourierBasis(n).matrix
    eye = np.eye(n)
    residual = float(max(np.max(np.abs(phi @ phi.conj().T - eye)),
                         np.max(np.abs(phi.conj().T @ phi - eye))))
    return VerificationReport("Fourier basis unitarity", n, residual, tol)


def verify_circulant_algebra(theta, eta, tol: float = 1e-10) -> VerificationReport:
    """C(theta) C(eta) = C(eta) C(theta), and the product is circulant."""
    A, B = circulant(theta), circulant(eta)
    AB = A @ B
    residual = float(max(np.max(np.abs(AB - B @ A)),
                         np.max(np.abs(AB - circulant(AB[:, 0])))))
    return VerificationReport("circulant products commute", len(theta), residual, tol)


def run_all(sizes=(2, 4, 8, 16, 32), seed: int = 0) -> list[VerificationReport]:
    rng = np.random.default_rng(seed)
    reports = []
    for n in sizes:
        theta, eta, x = rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal(n)
        reports.append(verify_commutation(theta, rng=rng))
        reports.append(verify_convolution_theorem(theta, x))
        reports.append(verify_eigrelation(n))
        reports.append(verify_fourier_unitarity(n))
        reports.append(verify_circulant_algebra(theta, eta))
    return reports
