"""Even-parity LMG Hamiltonian block and its classical limit.

The Hamiltonian is

    H = -(4(1 - alpha)/N) Jx^2 + alpha (Jz + N/2)

and the quench adds ``lam * (Jz + N/2)``.  Only the maximal-spin (j = N/2),
even-parity sector is built; in the Jz basis restricted to
m = -N/2, -N/2 + 2, ..., N/2 the block is exactly tridiagonal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ALPHA_CRITICAL = 0.8


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the quenched LMG model.

    Attributes
    ----------
    N : int
        Number of spins; must be even and >= 2.
    alpha : float
        Transverse field strength in [0, 1].
    lam : float
        Quench field along z, >= 0.
    """

    N: int
    alpha: float
    lam: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if self.N % 2:
            raise ValueError(f"N must be even, got {self.N}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.lam >= 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.N // 2 + 1

    def with_lambda(self, lam: float) -> "ModelParams":
        return ModelParams(self.N, self.alpha, lam)


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Symmetric tridiagonal block stored as its diagonal and one off-diagonal.

    ``params`` is None for matrices not built from the model (tests, oracles).
    """

    params: ModelParams | None
    diag: np.ndarray
    offdiag: np.ndarray

    @classmethod
    def from_arrays(cls, diag, offdiag) -> "TridiagonalHamiltonian":
        return cls(None, np.asarray(diag, dtype=float), np.asarray(offdiag, dtype=float))

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.offdiag, 1)
            + np.diag(self.offdiag, -1)
        )

    def norm(self) -> float:
        """Max-row-sum norm, an upper bound on the spectral radius."""
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())


def basis_mz(N: int) -> np.ndarray:
    """Jz eigenvalues of the even-parity basis, ascending."""
    return -N / 2 + 2.0 * np.arange(N // 2 + 1)


def build_hamiltonian(params: ModelParams) -> TridiagonalHamiltonian:
    N, alpha, lam = params.N, params.alpha, params.lam
    m = basis_mz(N)
    q = 2.0 * (1.0 - alpha) * m / N + 2.0 * alpha - 1.0
    diag = q * (N / 2 + m) + alpha - 1.0 + lam * (N / 2 + m)
    mm = m[:-1]
    offdiag = (
        -(1.0 - alpha)
        / N
        * np.sqrt(N / 2 - mm - 1)
        * np.sqrt((N / 2 - mm) * (N / 2 + mm + 1) * (N / 2 + mm + 2))
    )
    # exact zeros at alpha = 1 (avoid -0.0 noise in output files)
    offdiag = offdiag + 0.0
    return TridiagonalHamiltonian(params, diag, offdiag)


def critical_field(alpha: float) -> float:
    """Quench strength that lifts the ground state to the critical energy E_c = 0."""
    if not 0.0 < alpha < ALPHA_CRITICAL:
        raise ValueError(
            f"no excited-state transition for alpha={alpha}; need 0 < alpha < {ALPHA_CRITICAL}"
        )
    return (4.0 - 5.0 * alpha) / 2.0


def classical_hamiltonian(z, phi, params: ModelParams):
    """Spin-coherent-state energy at normalized Jz = z and azimuth phi.

    Uses Jx -> (N/2) sqrt(1 - z^2) cos(phi) and Jz -> (N/2) z, so the result is
    extensive.  Accepts scalars or broadcastable arrays.
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0):
        raise ValueError("|z| must not exceed 1")
    a, lam, N = params.alpha, params.lam, params.N
    e = N * (-(1.0 - a) * (1.0 - z * z) * np.cos(phi) ** 2 + 0.5 * (a + lam) * (1.0 + z))
    return e if np.ndim(e) else float(e)


def classical_ground_energy(params: ModelParams) -> float:
    """Minimum of the classical energy (attained at cos(phi)^2 = 1)."""
    a, lam, N = params.alpha, params.lam, params.N
    candidates = [-1.0, 1.0]
    if a < 1.0:
        zs = -(a + lam) / (4.0 * (1.0 - a))
        if -1.0 <= zs <= 1.0:
            candidates.append(zs)
    return min(classical_hamiltonian(z, 0.0, params) for z in candidates)
