"""Matrix group elements for SU(2) and SL(2,R) with word labels.

Elements carry a 2x2 defining matrix, an optional reduced word over a
registered generator alphabet, and (for rational SL(2,R) matrices) exact
Fraction entries so that distinct group elements never collide through
float rounding.  Distances are Hilbert-Schmidt: either on the defining
matrices or on the 3x3 adjoint realization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .words import (
    ResourceCapError,
    WordTuple,
    concat,
    count_reduced_words,
    enumerate_reduced_words,
    invert,
)

SU2 = "SU2"
SL2R = "SL2R"

_TOL = 1e-9

ExactMatrix = tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]


class GroupKindMismatch(ValueError):
    """Two elements from different groups were combined."""


def _exact_mul(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def _exact_inv(a: ExactMatrix) -> ExactMatrix:
    det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    if det != 1:
        raise ValueError(f"exact determinant is {det}, expected 1")
    return ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))


@dataclass(frozen=True)
class GroupElement:
    """Group element with defining matrix and optional word label."""

    kind: str
    matrix: np.ndarray
    word: Optional[WordTuple] = None
    exact: Optional[ExactMatrix] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix)
        if m.shape != (2, 2):
            raise ValueError(f"matrix shape {m.shape}, expected (2, 2)")
        if self.kind == SU2:
            m = m.astype(np.complex128)
            if abs(np.linalg.det(m) - 1.0) > 1e-6 or np.abs(m @ m.conj().T - np.eye(2)).max() > 1e-6:
                raise ValueError("matrix is not in SU(2) (det 1, unitary) to 1e-6")
        elif self.kind == SL2R:
            if np.iscomplexobj(m) and np.abs(m.imag).max() > _TOL:
                raise ValueError("SL(2,R) matrix has imaginary entries")
            m = m.real.astype(np.float64)
            if abs(np.linalg.det(m) - 1.0) > 1e-6:
                raise ValueError("matrix determinant differs from 1 by more than 1e-6")
        else:
            raise ValueError(f"unknown group kind {self.kind!r}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.exact is not None:
            det = self.exact[0][0] * self.exact[1][1] - self.exact[0][1] * self.exact[1][0]
            if det != 1:
                raise ValueError(f"exact determinant is {det}, expected 1")

    @staticmethod
    def identity(kind: str, with_word: bool = False) -> "GroupElement":
        exact = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))) if kind == SL2R else None
        return GroupElement(kind, np.eye(2), word=() if with_word else None, exact=exact)

    def mul(self, other: "GroupElement") -> "GroupElement":
        if self.kind != other.kind:
            raise GroupKindMismatch(f"{self.kind} * {other.kind}")
        word = None
        if self.word is not None and other.word is not None:
            word = concat(self.word, other.word)
        exact = None
        if self.exact is not None and other.exact is not None:
            exact = _exact_mul(self.exact, other.exact)
        return GroupElement(self.kind, self.matrix @ other.matrix, word=word, exact=exact)

    def inverse(self) -> "GroupElement":
        if self.kind == SU2:
            inv = self.matrix.conj().T
        else:
            a, b = self.matrix[0]
            c, d = self.matrix[1]
            inv = np.array([[d, -b], [-c, a]])
        word = invert(self.word) if self.word is not None else None
        exact = _exact_inv(self.exact) if self.exact is not None else None
        return GroupElement(self.kind, inv, word=word, exact=exact)

    def is_identity(self, tol: float = _TOL) -> bool:
        return bool(np.abs(self.matrix - np.eye(2)).max() <= tol)

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix - np.eye(2)))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return self.mul(other)


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    return a.mul(b)


def hs_distance(a: GroupElement, b: GroupElement, metric: str = "defining") -> float:
    """Hilbert-Schmidt distance ||A - B||_2 in the chosen realization.

    "defining" compares the 2x2 matrices; "adjoint" compares the real 3x3
    adjoint matrices.  The submultiplicative bound
    ||gh - gk||_2 <= ||g||_2 ||h - k||_2 holds in either realization.
    """
    if a.kind != b.kind:
        raise GroupKindMismatch(f"{a.kind} vs {b.kind}")
    if metric == "defining":
        return float(np.linalg.norm(a.matrix - b.matrix))
    if metric == "adjoint":
        if a.kind == SL2R:
            return float(np.linalg.norm(adjoint_matrix(a) - adjoint_matrix(b)))
        return float(np.linalg.norm(_adjoint_su2(a.matrix) - _adjoint_su2(b.matrix)))
    raise ValueError(f"unknown metric {metric!r}")


# sl(2,R) basis E = [[0,1],[0,0]], H = [[1,0],[0,-1]], F = [[0,0],[1,0]].
_SL2_BASIS = (
    np.array([[0.0, 1.0], [0.0, 0.0]]),
    np.array([[1.0, 0.0], [0.0, -1.0]]),
    np.array([[0.0, 0.0], [1.0, 0.0]]),
)


def adjoint_matrix(g: GroupElement) -> np.ndarray:
    """Matrix of X -> g X g^{-1} on sl(2,R) in the ordered basis (E, H, F).

    diag(t, 1/t) maps to diag(t^2, 1, t^-2).  Defined for SL(2,R) only;
    for SU(2) the three dimensional adjoint is the n = 2 irreducible and
    lives in the spectra module.
    """
    if g.kind != SL2R:
        raise ValueError("adjoint_matrix is defined for SL(2,R) elements")
    ginv = g.inverse().matrix
    cols = []
    for basis_elt in _SL2_BASIS:
        m = g.matrix @ basis_elt @ ginv
        cols.append([m[0, 1], m[0, 0], m[1, 0]])
    return np.array(cols).T


def _adjoint_su2(m: np.ndarray) -> np.ndarray:
    """Rotation matrix of X -> g X g^{-1} on su(2), orthonormalized basis."""
    basis = (
        np.array([[1j, 0], [0, -1j]]),
        np.array([[0, 1], [-1, 0]], dtype=complex),
        np.array([[0, 1j], [1j, 0]]),
    )
    minv = m.conj().T
    cols = []
    for b in basis:
        x = m @ b @ minv
        cols.append([x[0, 0].imag, x[0, 1].real, x[0, 1].imag])
    return np.array(cols).T


def su2_from_quaternion(q: Sequence[float]) -> np.ndarray:
    """Unit quaternion (q0, q1, q2, q3) -> SU(2) matrix [[a, b], [-conj(b), conj(a)]]."""
    q0, q1, q2, q3 = (float(x) for x in q)
    a = q0 + 1j * q3
    b = q2 + 1j * q1
    return np.array([[a, b], [-np.conj(b), np.conj(a)]])


def quaternion_of(m: np.ndarray) -> np.ndarray:
    """Inverse of su2_from_quaternion; ||g - h||_2 = sqrt(2) |q_g - q_h|."""
    a = m[0, 0]
    b = m[0, 1]
    return np.array([a.real, b.imag, b.real, a.imag])


@dataclass(frozen=True)
class GeneratorSet:
    """Finite ordered generator set; index i is the word letter (i, +1)."""

    elements: tuple[GroupElement, ...]
    freeness: str = "unknown"
    radius_eps: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.elements:
            raise ValueError("empty generator set")
        if self.freeness not in ("certified", "assumed", "unknown"):
            raise ValueError(f"freeness must be certified/assumed/unknown, got {self.freeness!r}")
        kinds = {g.kind for g in self.elements}
        if len(kinds) != 1:
            raise GroupKindMismatch(f"mixed kinds {kinds}")
        for i, g in enumerate(self.elements):
            if g.is_identity(1e-12):
                raise ValueError(f"generator {i} equals the identity")
            for j in range(i):
                if hs_distance(g, self.elements[j]) <= 1e-12:
                    raise ValueError(f"generators {j} and {i} coincide")
        if self.radius_eps is not None:
            worst = max(g.hs_norm() for g in self.elements)
            if worst > self.radius_eps + 1e-12:
                raise ValueError(
                    f"generator at distance {worst:.3g} from identity exceeds radius_eps {self.radius_eps}"
                )

    @property
    def kind(self) -> str:
        return self.elements[0].kind

    @property
    def k(self) -> int:
        return len(self.elements)

    def labeled(self) -> "GeneratorSet":
        """Same set with each generator carrying its single-letter word."""
        tagged = tuple(
            GroupElement(g.kind, g.matrix, word=((i, 1),), exact=g.exact)
            for i, g in enumerate(self.elements)
        )
        return GeneratorSet(tagged, freeness=self.freeness, radius_eps=self.radius_eps)

    def symmetric_elements(self) -> list[GroupElement]:
        """Generators followed by their inverses, words attached."""
        lab = self.labeled().elements
        return list(lab) + [g.inverse() for g in lab]


def evaluate_word(gens: GeneratorSet, word: WordTuple, exact: bool = False) -> GroupElement:
    """Product of generator matrices along a word; empty word is the identity."""
    out = GroupElement.identity(gens.kind, with_word=True)
    if exact and any(g.exact is None for g in gens.elements):
        raise ValueError("exact evaluation needs exact entries on every generator")
    lab = gens.labeled().elements
    cache = {}
    for idx, sign in word:
        if idx < 0 or idx >= gens.k:
            raise ValueError(f"letter index {idx} out of range for k={gens.k}")
        if (idx, sign) not in cache:
            g = lab[idx] if sign == 1 else lab[idx].inverse()
            if not exact:
                g = GroupElement(g.kind, g.matrix, word=g.word, exact=None)
            cache[(idx, sign)] = g
        out = out.mul(cache[(idx, sign)])
    return out


def evaluate_words_matrix(gens: GeneratorSet, ws: Sequence[WordTuple]) -> np.ndarray:
    """Stack of defining matrices for many words, batched over numpy."""
    lab = gens.labeled().elements
    mats = {}
    for idx in range(gens.k):
        mats[(idx, 1)] = lab[idx].matrix
        mats[(idx, -1)] = lab[idx].inverse().matrix
    dtype = np.complex128 if gens.kind == SU2 else np.float64
    maxlen = max((len(w) for w in ws), default=0)
    out = np.broadcast_to(np.eye(2, dtype=dtype), (len(ws), 2, 2)).copy()
    # group words by their letter at each position and batch the multiply
    for pos in range(maxlen):
        groups: dict[tuple[int, int], list[int]] = {}
        for row, w in enumerate(ws):
            if pos < len(w):
                groups.setdefault(w[pos], []).append(row)
        for letter, rows in groups.items():
            out[rows] = out[rows] @ mats[letter]
    return out


def enumerate_words(
    gens: GeneratorSet, n: int, mode: str = "exact", cap: int = 10_000_000
) -> Iterator[WordTuple]:
    """Reduced words over the generator alphabet; see words.enumerate_reduced_words."""
    return enumerate_reduced_words(gens.k, n, mode=mode, cap=cap)


def _parse_entry_real(v) -> tuple[float, Optional[Fraction]]:
    if isinstance(v, str):
        fr = Fraction(v)
        return float(fr), fr
    if isinstance(v, (int,)):
        return float(v), Fraction(v)
    if isinstance(v, float):
        return v, (Fraction(v).limit_denominator(10**12) if float(v).is_integer() else None)
    raise ValueError(f"cannot parse SL(2,R) entry {v!r}")


def _parse_entry_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return float(_parse_entry_real(v[0])[0]) + 1j * float(_parse_entry_real(v[1])[0])
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        return complex(float(Fraction(v)))
    raise ValueError(f"cannot parse SU(2) entry {v!r}")


def generator_set_from_dict(data: dict) -> GeneratorSet:
    """Build a GeneratorSet from the JSON wire format.

    {"group": "SU2" | "SL2R", "generators": [matrix, ...],
     "freeness": optional, "radius_eps": optional}

    SL(2,R) matrix entries may be numbers or exact "p/q" strings; SU(2)
    entries are [re, im] pairs (or bare reals).
    """
    kind = data.get("group")
    if kind not in (SU2, SL2R):
        raise ValueError(f"group must be SU2 or SL2R, got {kind!r}")
    raw = data.get("generators")
    if not isinstance(raw, list) or not raw:
        raise ValueError("generators must be a non-empty list of 2x2 matrices")
    elements = []
    for mat in raw:
        if kind == SL2R:
            floats = np.empty((2, 2))
            exact_rows = []
            all_exact = True
            for r in range(2):
                row = []
                for c in range(2):
                    f, fr = _parse_entry_real(mat[r][c])
                    floats[r, c] = f
                    row.append(fr)
                    all_exact = all_exact and fr is not None
                exact_rows.append(tuple(row))
            exact = (exact_rows[0], exact_rows[1]) if all_exact else None
            elements.append(GroupElement(SL2R, floats, exact=exact))
        else:
            m = np.array([[_parse_entry_complex(mat[r][c]) for c in range(2)] for r in range(2)])
            elements.append(GroupElement(SU2, m))
    return GeneratorSet(
        tuple(elements),
        freeness=data.get("freeness", "unknown"),
        radius_eps=data.get("radius_eps"),
    )


def load_generator_set(path: str) -> GeneratorSet:
    with open(path, "r", encoding="utf8") as fh:
        return generator_set_from_dict(json.load(fh))


def generator_set_to_dict(gens: GeneratorSet) -> dict:
    mats = []
    for g in gens.elements:
        if gens.kind == SL2R:
            if g.exact is not None:
                mats.append([[str(g.exact[r][c]) for c in range(2)] for r in range(2)])
            else:
                mats.append([[float(g.matrix[r, c]) for c in range(2)] for r in range(2)])
        else:
            mats.append(
                [
                    [[float(g.matrix[r, c].real), float(g.matrix[r, c].imag)] for c in range(2)]
                    for r in range(2)
                ]
            )
    out = {"group": gens.kind, "generators": mats, "freeness": gens.freeness}
    if gens.radius_eps is not None:
        out["radius_eps"] = gens.radius_eps
    return out


def sanov_pair() -> GeneratorSet:
    """The pair [[1,2],[0,1]], [[1,0],[2,1]]; free, certified by ping-pong."""
    return generator_set_from_dict(
        {
            "group": SL2R,
            "generators": [[["1", "2"], ["0", "1"]], [["1", "0"], ["2", "1"]]],
            "freeness": "certified",
        }
    )


def lps_p5() -> GeneratorSet:
    """Unit quaternion generators at p = 5, normalized into SU(2); free and dense."""
    s = 5 ** -0.5
    g1 = np.array([[s * (1 + 2j), 0], [0, s * (1 - 2j)]])
    g2 = np.array([[s * 1, s * 2], [-s * 2, s * 1]])
    g3 = np.array([[s * 1, s * 2j], [s * 2j, s * 1]])
    return GeneratorSet(
        tuple(GroupElement(SU2, m) for m in (g1, g2, g3)),
        freeness="assumed",
    )


def rational_near_identity_triple() -> GeneratorSet:
    """Exact rational SL(2,R) triple within distance 1/2 of the identity.

    A Pythagorean rotation and two half-shears; the generated group is
    non-discrete, which is what the bucket construction needs.
    """
    return generator_set_from_dict(
        {
            "group": SL2R,
            "generators": [
                [["24/25", "-7/25"], ["7/25", "24/25"]],
                [["1", "1/2"], ["0", "1"]],
                [["1", "0"], ["1/2", "1"]],
            ],
            "freeness": "assumed",
        }
    )


__all__ = [
    "SU2",
    "SL2R",
    "GroupElement",
    "GeneratorSet",
    "GroupKindMismatch",
    "ResourceCapError",
    "multiply",
    "hs_distance",
    "adjoint_matrix",
    "evaluate_word",
    "evaluate_words_matrix",
    "enumerate_words",
    "generator_set_from_dict",
    "generator_set_to_dict",
    "load_generator_set",
    "su2_from_quaternion",
    "quaternion_of",
    "sanov_pair",
    "lps_p5",
    "rational_near_identity_triple",
    "count_reduced_words",
]
