"""Symmetric matrices and their sorted spectral decompositions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels

__all__ = [
    "ConvergenceError",
    "NotSymmetricError",
    "SymmetricMatrix",
    "SpectralDecomposition",
    "eigh",
    "eigenvalues_only",
    "batch_eigenvalues",
    "JACOBI_TOL",
    "JACOBI_MAX_SWEEPS",
]

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50


class ConvergenceError(ArithmeticError):
    """The Jacobi iteration did not converge within the sweep limit."""


class NotSymmetricError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Dense real symmetric matrix.

    Construction requires exact symmetry and finite entries; use
    :meth:`from_array` to accept a nearly symmetric array and average it.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            raise NotSymmetricError("matrix is not exactly symmetric")
        object.__setattr__(self, "entries", _readonly(a))

    @classmethod
    def from_array(cls, values, rtol: float = 1e-8) -> "SymmetricMatrix":
        """Accept ``values`` if symmetric within ``rtol`` (relative to the
        largest entry) and return the averaged ``(A + A') / 2``."""
        a = np.asarray(values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        scale = max(1.0, float(np.abs(a).max()))
        asym = float(np.abs(a - a.T).max())
        if asym > rtol * scale:
            raise NotSymmetricError(
                f"matrix asymmetry {asym:.3g} exceeds tolerance {rtol * scale:.3g}"
            )
        return cls(0.5 * (a + a.T))

    @classmethod
    def diagonal(cls, values) -> "SymmetricMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"SymmetricMatrix(p={self.p}, entries={self.entries.tolist()!r})"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """``S = Q diag(eigenvalues) Q'`` with eigenvalues in descending order.

    ``eigenvectors`` holds the eigenvectors as columns; it is ``None`` when
    only the spectrum was computed.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1)
        if np.any(np.diff(vals) > 0):
            raise ValueError("eigenvalues must be sorted in descending order")
        object.__setattr__(self, "eigenvalues", _readonly(vals))
        if self.eigenvectors is not None:
            q = np.asarray(self.eigenvectors, dtype=np.float64)
            if q.shape != (vals.size, vals.size):
                raise ValueError("eigenvector matrix has the wrong shape")
            object.__setattr__(self, "eigenvectors", _readonly(q))

    @classmethod
    def from_eigenvalues(cls, values) -> "SpectralDecomposition":
        """Wrap a known spectrum (sorted descending here)."""
        vals = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))[::-1]
        return cls(vals)

    @property
    def p(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        if self.eigenvectors is None:
            raise ValueError("no eigenvectors stored")
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


def _orient(q: np.ndarray) -> np.ndarray:
    # first entry of largest magnitude in each column made nonnegative
    idx = np.argmax(np.abs(q), axis=0)
    signs = np.where(q[idx, np.arange(q.shape[1])] < 0, -1.0, 1.0)
    return q * signs


def _as_array(s) -> np.ndarray:
    if isinstance(s, SymmetricMatrix):
        return s.entries
    return SymmetricMatrix(s).entries


def eigh(s: SymmetricMatrix) -> SpectralDecomposition:
    """Full decomposition by cyclic Jacobi rotations."""
    a = _as_array(s)
    vals, vecs, conv = kernels.jacobi_eigh(a[None], True, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not conv[0]:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return SpectralDecomposition(vals[0], _orient(vecs[0]))


def eigenvalues_only(s: SymmetricMatrix) -> np.ndarray:
    """Descending eigenvalues without accumulating rotations."""
    a = _as_array(s)
    vals, _, conv = kernels.jacobi_eigh(a[None], False, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not conv[0]:
        raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return vals[0]


def batch_eigenvalues(stack: np.ndarray) -> np.ndarray:
    """Descending eigenvalues for a ``(k, p, p)`` stack of symmetric matrices."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ValueError(f"expected a (k, p, p) stack, got shape {stack.shape}")
    vals, _, conv = kernels.jacobi_eigh(stack, False, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if not np.all(conv):
        raise ConvergenceError(f"{int((~conv).sum())} matrices did not converge")
    return vals
