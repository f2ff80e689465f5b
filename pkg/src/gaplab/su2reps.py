"""Irreducible representations of SU(2) and spectra of averaging operators.

The (n+1)-dimensional irrep acts on homogeneous degree-n polynomials by
(pi_n(g)p)(z) = p(g^{-1}z), carried in the orthonormal monomial basis
e_i = z1^i z2^{n-i} / sqrt(i!(n-i)!).  Matrices are assembled from the
Euler factorization g = Rz(phi) Ry(beta) Rz(psi): the two z-rotations are
exact diagonals of phases, and pi_n(Ry(beta)) = exp(beta A_n) for the
tridiagonal derived generator A_n, evaluated through the eigensystem of
the Hermitian matrix iA_n whose spectrum is exactly {i - n/2}.  Every
factor is unitary at machine precision, which is what makes high levels
reachable; building the monomial coefficients degree by degree, even in
normalized coordinates, amplifies rounding by roughly sqrt(i/j) per step
and collapses past level 100.

The independent correctness oracle is the character identity
tr pi_n(g) = sin((n+1)theta)/sin(theta) with 2cos(theta) = tr(g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .groups import SU2, GeneratorSet, GroupElement
from .measures import AtomicMeasure, symmetrize

IRREP_CAP = 512


@lru_cache(maxsize=64)
def _rotation_eigs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigensystem of i A_n where A_n = d(pi_n)(K), K the y-rotation generator.

    A_n e_i = (1/2) sqrt(i(n-i+1)) e_{i-1} - (1/2) sqrt((i+1)(n-i)) e_{i+1};
    iA_n is Hermitian with spectrum exactly i - n/2, i = 0..n, so the
    eigenvalues are snapped to those half-integers.
    """
    i = np.arange(n, dtype=float)
    off = -0.5 * np.sqrt((i + 1.0) * (n - i))  # entry (i+1, i)
    A = np.zeros((n + 1, n + 1))
    A[np.arange(1, n + 1), np.arange(n)] = off
    A[np.arange(n), np.arange(1, n + 1)] = -off
    lam, Q = np.linalg.eigh(1j * A)
    exact = np.arange(n + 1, dtype=float) - n / 2.0
    if np.abs(lam - exact).max() > 1e-8:
        raise RuntimeError("rotation generator spectrum off its exact values")
    return exact, Q


def _euler_zyz(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angles with g = Rz(phi) Ry(beta) Rz(psi), Rz(t) = diag(e^{-it/2}, e^{it/2})."""
    a = mats[:, 0, 0]
    b = mats[:, 0, 1]
    beta = 2.0 * np.arctan2(np.abs(b), np.abs(a))
    pp = np.where(np.abs(a) > 0, -2.0 * np.angle(a), 0.0)
    pm = np.where(np.abs(b) > 0, -2.0 * np.angle(-b), 0.0)
    return (pp + pm) / 2.0, beta, (pp - pm) / 2.0


def _level(mats: np.ndarray, n: int) -> np.ndarray:
    """pi_n over a batch of SU(2) matrices, shape (batch, n+1, n+1)."""
    mats = np.asarray(mats, dtype=complex)
    phi, beta, psi = _euler_zyz(mats)
    lam, Q = _rotation_eigs(n)
    core = (Q[None, :, :] * np.exp(-1j * np.outer(beta, lam))[:, None, :]) @ Q.conj().T
    m = np.arange(n + 1, dtype=float) - n / 2.0
    return (np.exp(1j * np.outer(phi, m))[:, :, None]
            * core
            * np.exp(1j * np.outer(psi, m))[:, None, :])


def _unitary_levels(mats: np.ndarray, n_max: int) -> Iterator[np.ndarray]:
    """Yield pi_k for k = 0..n_max as (batch, k+1, k+1) unitaries."""
    mats = np.asarray(mats, dtype=complex)
    for k in range(n_max + 1):
        yield _level(mats, k)


def irrep_matrix(g: GroupElement, n: int) -> np.ndarray:
    """Unitary matrix of pi_n(g) on the normalized monomial basis."""
    if g.kind != SU2:
        raise ValueError("irreps here are those of SU(2)")
    if n < 0:
        raise ValueError("negative level")
    if n > IRREP_CAP:
        raise ValueError(f"level {n} exceeds cap {IRREP_CAP}")
    return _level(g.matrix[None, :, :], n)[0]


def irrep_matrices(mats: np.ndarray, n_max: int) -> list[np.ndarray]:
    """All levels 0..n_max for a batch of SU(2) matrices."""
    if n_max > IRREP_CAP:
        raise ValueError(f"level {n_max} exceeds cap {IRREP_CAP}")
    return list(_unitary_levels(mats, n_max))


def character(g: GroupElement, n: int) -> float:
    """sin((n+1)theta)/sin(theta) with 2cos(theta) = tr g; the trace oracle."""
    t = float(np.real(np.trace(g.matrix))) / 2.0
    t = min(1.0, max(-1.0, t))
    theta = math.acos(t)
    if abs(math.sin(theta)) < 1e-8:
        sign = 1.0 if t > 0 else (-1.0) ** n
        return sign * (n + 1)
    return math.sin((n + 1) * theta) / math.sin(theta)


def _averaging_raw(mu: AtomicMeasure, n: int) -> np.ndarray:
    if mu.kind != SU2:
        raise ValueError("averaging spectra require SU(2) atoms")
    if n > IRREP_CAP:
        raise ValueError(f"level {n} exceeds cap {IRREP_CAP}")
    w = mu.weights_array().astype(complex)
    for level in _unitary_levels(mu.matrices(), n):
        pass
    return np.einsum("r,rij->ij", w, level)


def averaging_matrix(mu: AtomicMeasure, n: int) -> np.ndarray:
    """sum_g mu({g}) pi_n(g), Hermitized; the block of P_mu at level n."""
    op = _averaging_raw(mu, n)
    return 0.5 * (op + op.conj().T)


def hermiticity_defect(mu: AtomicMeasure, n: int) -> float:
    op = _averaging_raw(mu, n)
    return float(np.abs(op - op.conj().T).max())


def averaging_spectrum(mu: AtomicMeasure, n: int) -> np.ndarray:
    """Sorted real eigenvalues of the level-n averaging operator."""
    return np.linalg.eigvalsh(averaging_matrix(mu, n))


def averaging_spectra(mu: AtomicMeasure, n_max: int) -> list[np.ndarray]:
    """Spectra for every level 1..n_max, sharing one ladder pass."""
    if mu.kind != SU2:
        raise ValueError("averaging spectra require SU(2) atoms")
    if n_max > IRREP_CAP:
        raise ValueError(f"level {n_max} exceeds cap {IRREP_CAP}")
    w = mu.weights_array().astype(complex)
    out = []
    for n, level in enumerate(_unitary_levels(mu.matrices(), n_max)):
        if n == 0:
            continue
        op = np.einsum("r,rij->ij", w, level)
        out.append(np.linalg.eigvalsh(0.5 * (op + op.conj().T)))
    return out


def exceptional_count(mu: AtomicMeasure, n: int, k: int, tol: float = 1e-9) -> int:
    """Eigenvalues at level n outside the closed Kesten interval for k generators."""
    bound = math.sqrt(2 * k - 1) / k
    eig = averaging_spectrum(mu, n)
    return int(np.sum(np.abs(eig) > bound + tol))


@dataclass(frozen=True)
class CensusRow:
    n: int
    count_in_half_one: int
    cumulative: int


def second_gap_census(T: GeneratorSet, n_max: int) -> list[CensusRow]:
    """Per-level counts of averaging eigenvalues in the open interval (1/2, 1).

    The closer T sits to the identity the longer the low levels hold
    eigenvalues near 1, so the cumulative count grows as the radius of T
    shrinks; the census quantifies that.
    """
    alphabet = GeneratorSet(
        tuple(GroupElement(g.kind, g.matrix) for g in T.elements),
        freeness=T.freeness if T.freeness != "unknown" else "assumed",
    )
    mu = symmetrize(alphabet, key_mode="word")
    rows = []
    cum = 0
    for n, eig in enumerate(averaging_spectra(mu, n_max), start=1):
        c = int(np.sum((eig > 0.5) & (eig < 1.0)))
        cum += c
        rows.append(CensusRow(n=n, count_in_half_one=c, cumulative=cum))
    return rows
