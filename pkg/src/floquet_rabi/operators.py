"""Truncated operator algebra for a two-level system coupled to one bosonic mode.

Product-space convention (used everywhere in the package): the composite index
is ``i = 2 * n + s`` with photon number ``n`` in ``[0, n_fock)`` and TLS label
``s`` in ``{0: ground, 1: excited}``.  The photon index varies slowest, so a
product operator is ``np.kron(fock_op, tls_op)``.

Pauli sign convention: in the ``(ground, excited)`` ordering ``sigma_z`` is
``diag(-1, +1)``, so ``+(omega_a / 2) * sigma_z`` puts the excited state at
``+omega_a / 2``.  ``sigma_y`` is chosen so that ``sigma_x sigma_y = i sigma_z``
still holds in this ordering, i.e. it is the textbook matrix with rows and
columns swapped.

Operators are plain complex ``numpy`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ConfigError, SolverError

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class BasisDescriptor:
    """Truncated TLS x Fock product basis with ``dim = 2 * n_fock``."""

    n_fock: int

    def __post_init__(self):
        if int(self.n_fock) != self.n_fock or self.n_fock < 2:
            raise ConfigError(f"n_fock must be an integer >= 2, got {self.n_fock!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n_fock

    def index(self, n: int, s: int) -> int:
        if not (0 <= n < self.n_fock and s in (0, 1)):
            raise IndexError(f"(n={n}, s={s}) outside basis with n_fock={self.n_fock}")
        return 2 * n + s

    def labels(self, i: int) -> tuple[int, int]:
        if not 0 <= i < self.dim:
            raise IndexError(f"index {i} outside [0, {self.dim})")
        return divmod(i, 2)


def fock_ladder(basis: BasisDescriptor) -> np.ndarray:
    """Annihilation operator ``a`` on the ``n_fock``-level photon space."""
    n = basis.n_fock
    if n < 2:
        raise ConfigError("photon space needs at least two levels")
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


def number_operator(basis: BasisDescriptor) -> np.ndarray:
    return np.diag(np.arange(basis.n_fock, dtype=float)).astype(complex)


def quadrature(basis: BasisDescriptor) -> np.ndarray:
    """``X = a + a^dagger``: real symmetric, tridiagonal, zero diagonal."""
    a = fock_ladder(basis)
    return a + a.conj().T


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    """Pauli matrix in the ``(ground, excited)`` ordering.

    ``pauli("z")`` is ``diag(-1, +1)``: ground state at -1, excited at +1.
    """
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}") from None


def embed(tls_op: np.ndarray, fock_op: np.ndarray, basis: BasisDescriptor) -> np.ndarray:
    """Tensor product ``fock_op (x) tls_op`` laid out with index ``i = 2 n + s``."""
    tls_op = np.asarray(tls_op)
    fock_op = np.asarray(fock_op)
    if tls_op.shape != (2, 2):
        raise ValueError(f"TLS operator must be 2x2, got {tls_op.shape}")
    if fock_op.shape != (basis.n_fock, basis.n_fock):
        raise ValueError(
            f"photon operator must be {basis.n_fock}x{basis.n_fock}, got {fock_op.shape}"
        )
    return np.kron(fock_op, tls_op)


def parity_diagonal(basis: BasisDescriptor) -> np.ndarray:
    """Diagonal of the parity ``sigma_z (x) (-1)^{a^dagger a}``.

    Commutes with the Coulomb-gauge Hamiltonian for any coupling waveform,
    because ``X -> -X`` together with ``sigma_y -> -sigma_y`` leaves it invariant.
    """
    n = np.repeat(np.arange(basis.n_fock), 2)
    s = np.tile([-1.0, 1.0], basis.n_fock)
    return s * (-1.0) ** n


def max_hermitian_defect(A: np.ndarray) -> float:
    return float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0


def _check_hermitian(A: np.ndarray) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    defect = max_hermitian_defect(A)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max |A - A^H| = {defect:.3e})")


class SpectralDecomposition:
    """Cached ``A = V diag(w) V^dagger`` for repeated matrix-function evaluation."""

    def __init__(self, A: np.ndarray):
        A = np.asarray(A)
        _check_hermitian(A)
        try:
            w, V = np.linalg.eigh(A)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"eigendecomposition failed: {exc}") from exc
        w.flags.writeable = False
        V.flags.writeable = False
        self.eigenvalues = w
        self.eigenvectors = V

    def apply(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        fw = np.asarray(f(self.eigenvalues))
        V = self.eigenvectors
        return (V * fw) @ V.conj().T

    def apply_diag(self, fw: np.ndarray) -> np.ndarray:
        """Like :meth:`apply` but with precomputed values on the eigenvalues."""
        V = self.eigenvectors
        return (V * fw) @ V.conj().T


def hermitian_function(A: np.ndarray, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Evaluate ``f(A)`` for Hermitian ``A`` via its eigendecomposition.

    ``f`` must be vectorised over a real array; it may return complex values.
    Raises ``ValueError`` when ``A`` is not Hermitian to ``1e-10``.
    """
    return SpectralDecomposition(A).apply(f)


@lru_cache(maxsize=16)
def quadrature_spectrum(n_fock: int) -> SpectralDecomposition:
    """Shared, read-only eigendecomposition of the truncated ``a + a^dagger``."""
    return SpectralDecomposition(quadrature(BasisDescriptor(n_fock)).real)
