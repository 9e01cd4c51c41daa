"""Finite-dimensional algebra shared by the Lax, Poisson and quantum layers.

The sl(N) basis is the projective ``T_a = (N / 2 pi i) e_N(a1 a2 / 2) Q^a1 Lambda^a2``.
It depends on the integer representative of ``a``: shifting ``a`` by ``N c``
multiplies ``T_a`` by ``(-1)^(a1 c2 + c1 a2 + N c1 c2)``.  Coefficients ``S_a`` are
always attached to the reduced representative in ``[0, N)^2``; ``coefficient``
converts a raw index into the reduced coefficient with its sign.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .elliptic import DomainError, LatticeIndex, e_N

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# sigma_alpha = c * T_index  (sigma_1 = i pi T_01, sigma_2 = i pi T_11, sigma_3 = -i pi T_10)
SIGMA_FROM_T = {1: ((0, 1), 1j * math.pi), 2: ((1, 1), 1j * math.pi), 3: ((1, 0), -1j * math.pi)}


def levi_civita(a: int, b: int, c: int) -> int:
    """epsilon_{abc} for a, b, c in {1, 2, 3}."""
    return (a - b) * (b - c) * (c - a) // 2


def cyclic(alpha: int) -> tuple[int, int]:
    """(beta, gamma) completing alpha to a cyclic permutation of (1, 2, 3)."""
    beta = alpha % 3 + 1
    return beta, beta % 3 + 1


@lru_cache(maxsize=None)
def _q_lambda(N: int):
    Q = np.diag([e_N(k, N) for k in range(1, N + 1)])
    Lam = np.roll(np.eye(N, dtype=complex), 1, axis=1)
    return Q, Lam


def t_matrix(a1: int, a2: int, N: int) -> np.ndarray:
    """T_a for the raw integer index (a1, a2)."""
    Q, Lam = _q_lambda(N)
    return (N / (2j * math.pi)) * e_N(a1 * a2 / 2, N) * (
        np.linalg.matrix_power(Q, a1 % N) @ np.linalg.matrix_power(Lam, a2 % N)
    )


def reduction_sign(a1: int, a2: int, N: int) -> int:
    """T_(a1, a2) = reduction_sign * T_(a1 mod N, a2 mod N)."""
    c1, r1 = divmod(a1, N)
    c2, r2 = divmod(a2, N)
    return -1 if (c1 * r2 + r1 * c2 + N * c1 * c2) % 2 else 1


def basis_indices(N: int) -> list[tuple[int, int]]:
    """Reduced nonzero indices of (Z/N)^2 in lexicographic order."""
    return [(i, j) for i in range(N) for j in range(N) if (i, j) != (0, 0)]


def structure_constant(a, b, N: int) -> float:
    """C(a, b) = (N / pi) sin(pi (a x b) / N)."""
    a1, a2 = (a.a1, a.a2) if isinstance(a, LatticeIndex) else a
    b1, b2 = (b.a1, b.a2) if isinstance(b, LatticeIndex) else b
    return N / math.pi * math.sin(math.pi * (a1 * b2 - a2 * b1) / N)


def is_zero_index(a, N: int) -> bool:
    return a[0] % N == 0 and a[1] % N == 0


class SlnBasis:
    """The basis {T_a} of sl(N) with coefficient bookkeeping."""

    def __init__(self, N: int):
        if N < 2:
            raise DomainError("N must be at least 2")
        self.N = N
        self.indices = basis_indices(N)
        self.position = {a: k for k, a in enumerate(self.indices)}
        self.matrices = [t_matrix(a1, a2, N) for a1, a2 in self.indices]

    @property
    def dim(self) -> int:
        return len(self.indices)

    def coefficient(self, S, a) -> complex:
        """Coefficient of the raw-index element T_a in sum_b S_b T_b."""
        a1, a2 = a
        N = self.N
        if is_zero_index(a, N):
            return 0j
        return reduction_sign(a1, a2, N) * S[self.position[(a1 % N, a2 % N)]]

    def combine(self, coeffs) -> np.ndarray:
        return sum(c * T for c, T in zip(coeffs, self.matrices))

    def decompose(self, A: np.ndarray) -> np.ndarray:
        """Coefficients of a traceless matrix in the T basis (exact inversion via traces)."""
        # tr(T_a T_b) is nonzero only for b = -a; use a linear solve for robustness
        M = np.stack([T.ravel() for T in self.matrices], axis=1)
        sol, *_ = np.linalg.lstsq(M, A.ravel(), rcond=None)
        return sol

    def bracket_coefficients(self, a, b):
        """[T_a, T_b] = c T_[a+b] for reduced a, b: returns (c, reduced a+b) or (0, None)."""
        N = self.N
        s = (a[0] + b[0], a[1] + b[1])
        if is_zero_index(s, N):
            return 0.0, None
        c = -structure_constant(a, b, N) * reduction_sign(*s, N)
        return c, (s[0] % N, s[1] % N)


def sigma_coefficients(A: np.ndarray) -> np.ndarray:
    """(A_0, A_1, A_2, A_3) with A = sum_a A_a sigma_a."""
    return np.array([np.trace(A @ s) / 2 for s in PAULI])
