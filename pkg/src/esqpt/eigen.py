"""Symmetric tridiagonal eigensolver (implicit-shift QL, Wilkinson shifts)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import ModelParams, TridiagonalHamiltonian

MAX_ITERATIONS = 50


class EigenConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs sorted by ascending energy; column k of ``vectors`` pairs with ``energies[k]``."""

    energies: np.ndarray
    vectors: np.ndarray
    source: ModelParams | None = None

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


@njit(cache=True, nogil=True)
def _tql(d, e, zt, want_vectors, max_iter):
    # d: diagonal (overwritten by eigenvalues); e: off-diagonal padded to n with e[n-1] = 0.
    # zt holds eigenvectors as rows so each rotation touches two contiguous rows.
    n = d.shape[0]
    eps = np.finfo(np.float64).eps
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                return l
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(n):
                        f = zt[i + 1, k]
                        zt[i + 1, k] = s * zt[i, k] + c * f
                        zt[i, k] = c * zt[i, k] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def _run(H, want_vectors: bool):
    diag = np.asarray(H.diag, dtype=np.float64)
    offdiag = np.asarray(H.offdiag, dtype=np.float64)
    n = diag.shape[0]
    if n < 1:
        raise ValueError("empty matrix")
    if offdiag.shape[0] != n - 1:
        raise ValueError(f"off-diagonal length {offdiag.shape[0]} does not match dim {n}")
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(offdiag))):
        raise ValueError("matrix entries must be finite")
    d = diag.copy()
    e = np.zeros(n)
    e[: n - 1] = offdiag
    zt = np.eye(n) if want_vectors else np.empty((0, 0))
    failed = _tql(d, e, zt, want_vectors, MAX_ITERATIONS)
    if failed >= 0:
        raise EigenConvergenceError(
            f"QL iteration did not converge for eigenvalue {failed} after "
            f"{MAX_ITERATIONS} iterations (dim={n}, source={getattr(H, 'params', None)})"
        )
    return d, zt


def eigh_tridiagonal(H: TridiagonalHamiltonian) -> SpectralDecomposition:
    """All eigenpairs of a real symmetric tridiagonal matrix.

    Eigenvectors follow a fixed sign convention: the component of largest
    magnitude is positive (lowest index wins ties), so overlaps between two
    decompositions are reproducible run to run.
    """
    d, zt = _run(H, True)
    order = np.argsort(d, kind="stable")
    energies = d[order]
    vectors = np.ascontiguousarray(zt[order].T)
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivot, np.arange(vectors.shape[1])] < 0.0, -1.0, 1.0)
    vectors *= signs
    return SpectralDecomposition(energies, vectors, getattr(H, "params", None))


def eigvalsh_tridiagonal(H: TridiagonalHamiltonian) -> np.ndarray:
    """Eigenvalues only, ascending (O(dim^2) work)."""
    d, _ = _run(H, False)
    return np.sort(d)


def rescale_energies(dec_or_energies) -> np.ndarray:
    """Affine map of the spectrum onto [0, 1]: (E - E_0) / (E_max - E_0)."""
    energies = np.asarray(getattr(dec_or_energies, "energies", dec_or_energies), dtype=float)
    if energies.shape[0] < 2:
        raise ValueError("need at least two levels to rescale")
    lo, hi = energies.min(), energies.max()
    if hi <= lo:
        raise ValueError("degenerate spectrum: E_max == E_0")
    return (energies - lo) / (hi - lo)
