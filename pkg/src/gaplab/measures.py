"""Finitely supported symmetric measures and their convolutions.

Word-keyed measures live on the free group over a generator alphabet and
use exact Fraction weights, so convolution identities like
(mu * mu)({e}) = 1/4 hold on the nose.  Matrix-keyed measures quantize
the defining matrix at a fixed resolution and carry float weights.

The Kesten comparison for the uniform symmetric measure on k free
generators is mu^{*n}({g}) <= (sqrt(2k-1)/k)^n, and the distance of the
lazy-free random walk from its start is itself a Markov chain on the
nonnegative integers; `free_return_probability` integrates that chain
exactly and is the reference oracle for return probabilities far beyond
any enumerable support.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    generator_set_from_dict,
    generator_set_to_dict,
)
from .words import EMPTY, ResourceCapError, WordTuple, concat, invert

Weight = Union[Fraction, float]

DEFAULT_ATOM_CAP = 10_000_000


def kesten_bound(k: int, n: int) -> float:
    return (math.sqrt(2 * k - 1) / k) ** n


@dataclass
class AtomicMeasure:
    """Finitely supported measure with word or quantized-matrix keys."""

    kind: str
    key_mode: str  # "word" | "quantized_matrix"
    atoms: dict
    gens: Optional[GeneratorSet] = None
    resolution: Optional[float] = None
    reps: Optional[dict] = None  # key -> defining matrix

    def __post_init__(self) -> None:
        if self.key_mode not in ("word", "quantized_matrix"):
            raise ValueError(f"unknown key mode {self.key_mode!r}")
        if self.key_mode == "word" and self.gens is None:
            raise ValueError("word-keyed measures need a generator set")
        if self.key_mode == "quantized_matrix" and not self.resolution:
            raise ValueError("matrix-keyed measures need a quantization resolution")
        for w in self.atoms.values():
            if w < 0:
                raise ValueError("negative atom weight")

    @property
    def size(self) -> int:
        return len(self.atoms)

    def total_mass(self) -> Weight:
        return sum(self.atoms.values())

    def identity_mass(self) -> Weight:
        if self.key_mode == "word":
            return self.atoms.get(EMPTY, Fraction(0))
        key = _quantize(np.eye(2, dtype=complex if self.kind == SU2 else float), self.resolution)
        return self.atoms.get(key, 0.0)

    def is_symmetric(self) -> bool:
        if self.key_mode == "word":
            return all(
                self.atoms.get(invert(w), None) == wt for w, wt in self.atoms.items()
            )
        for key, wt in self.atoms.items():
            m = self.reps[key]
            inv_key = _quantize(_inverse(self.kind, m), self.resolution)
            other = self.atoms.get(inv_key)
            if other is None or not math.isclose(float(other), float(wt), rel_tol=1e-9):
                return False
        return True

    def matrices(self) -> np.ndarray:
        """Defining matrices of the atoms, in canonical key order."""
        return np.stack([self.reps[k] for k in self.sorted_keys()])

    def weights_array(self) -> np.ndarray:
        return np.array([float(self.atoms[k]) for k in self.sorted_keys()])

    def sorted_keys(self) -> list:
        return sorted(self.atoms.keys())

    def support_radius(self, metric: str = "defining") -> float:
        """Largest HS distance of a support point from the identity."""
        from .groups import hs_distance

        worst = 0.0
        for k in self.atoms:
            g = GroupElement(self.kind, self.reps[k])
            worst = max(worst, hs_distance(g, GroupElement.identity(self.kind), metric=metric))
        return worst

    def to_json(self) -> str:
        recs = []
        for key in self.sorted_keys():
            wt = self.atoms[key]
            rec = {"weight": str(wt) if isinstance(wt, Fraction) else float(wt)}
            if self.key_mode == "word":
                rec["word"] = [list(l) for l in key]
            else:
                rec["key"] = list(key)
                m = self.reps[key]
                rec["matrix"] = [
                    [[float(np.real(m[r, c])), float(np.imag(m[r, c]))] for c in range(2)]
                    for r in range(2)
                ]
            recs.append(rec)
        payload = {
            "kind": self.kind,
            "key_mode": self.key_mode,
            "atoms": recs,
        }
        if self.resolution is not None:
            payload["resolution"] = self.resolution
        if self.gens is not None:
            payload["gens"] = generator_set_to_dict(self.gens)
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "AtomicMeasure":
        data = json.loads(text)
        gens = generator_set_from_dict(data["gens"]) if "gens" in data else None
        atoms: dict = {}
        reps: dict = {}
        if data["key_mode"] == "word":
            ev = _Evaluator(gens)
            for rec in data["atoms"]:
                w = tuple((int(i), int(s)) for i, s in rec["word"])
                atoms[w] = Fraction(rec["weight"]) if isinstance(rec["weight"], str) else rec["weight"]
                reps[w] = ev.matrix(w)
        else:
            for rec in data["atoms"]:
                key = tuple(rec["key"])
                atoms[key] = float(rec["weight"])
                m = np.array(
                    [[complex(*rec["matrix"][r][c]) for c in range(2)] for r in range(2)]
                )
                if data["kind"] == SL2R:
                    m = m.real
                reps[key] = m
        return AtomicMeasure(
            kind=data["kind"],
            key_mode=data["key_mode"],
            atoms=atoms,
            gens=gens,
            resolution=data.get("resolution"),
            reps=reps,
        )


def _inverse(kind: str, m: np.ndarray) -> np.ndarray:
    if kind == SU2:
        return m.conj().T
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def _quantize(m: np.ndarray, resolution: float) -> tuple:
    vals = []
    for r in range(2):
        for c in range(2):
            vals.append(int(round(float(np.real(m[r, c])) / resolution)))
            if np.iscomplexobj(m):
                vals.append(int(round(float(np.imag(m[r, c])) / resolution)))
    return tuple(vals)


class _Evaluator:
    """Letter-matrix cache so word reps cost one product per letter."""

    def __init__(self, gens: GeneratorSet):
        lab = gens.labeled().elements
        self.table = {}
        for i, g in enumerate(lab):
            self.table[(i, 1)] = g.matrix
            self.table[(i, -1)] = g.inverse().matrix
        self.kind = gens.kind

    def matrix(self, w: WordTuple) -> np.ndarray:
        m = np.eye(2, dtype=complex if self.kind == SU2 else float)
        for letter in w:
            m = m @ self.table[letter]
        return m


def symmetrize(
    source: Union[GeneratorSet, Sequence[GroupElement]],
    key_mode: str = "word",
    gens: Optional[GeneratorSet] = None,
    resolution: Optional[float] = None,
) -> AtomicMeasure:
    """Uniform measure on T together with T^{-1}, duplicate keys merged.

    With a GeneratorSet the support is the symmetric closure of the
    alphabet and words are single letters.  With a list of labeled
    elements (as produced by the escape construction) the word keys are
    the elements' reduced words over `gens`.
    """
    if isinstance(source, GeneratorSet):
        base = source
        elements = source.symmetric_elements()
        gens = source
    else:
        elements = []
        for g in source:
            elements.append(g)
        elements = elements + [g.inverse() for g in elements]
        base = gens
    n = len(elements)
    if n == 0:
        raise ValueError("empty support")
    atoms: dict = {}
    reps: dict = {}
    if key_mode == "word":
        if base is None:
            raise ValueError("word keys need the generator alphabet")
        share = Fraction(1, n)
        for g in elements:
            if g.word is None:
                raise ValueError("element lacks a word label")
            atoms[g.word] = atoms.get(g.word, Fraction(0)) + share
            reps[g.word] = g.matrix
        return AtomicMeasure(base.kind, "word", atoms, gens=base, reps=reps)
    if resolution is None:
        raise ValueError("matrix keys need a resolution")
    share_f = 1.0 / n
    for g in elements:
        key = _quantize(g.matrix, resolution)
        atoms[key] = atoms.get(key, 0.0) + share_f
        reps.setdefault(key, g.matrix)
    return AtomicMeasure(elements[0].kind, "quantized_matrix", atoms, resolution=resolution, reps=reps)


def convolve(mu: AtomicMeasure, nu: AtomicMeasure, cap: int = DEFAULT_ATOM_CAP) -> AtomicMeasure:
    """(mu * nu)({x}) = sum_y mu({y}) nu({y^{-1} x}), keys combined exactly."""
    if mu.kind != nu.kind or mu.key_mode != nu.key_mode:
        raise ValueError("incompatible measures")
    if len(mu.atoms) * len(nu.atoms) > 40 * cap:
        raise ResourceCapError(
            f"convolution would touch {len(mu.atoms) * len(nu.atoms)} pairs"
        )
    atoms: dict = {}
    reps: dict = {}
    if mu.key_mode == "word":
        if mu.gens is not nu.gens and mu.gens.elements != nu.gens.elements:
            raise ValueError("word measures over different alphabets")
        for w1, a in mu.atoms.items():
            m1 = mu.reps[w1]
            for w2, b in nu.atoms.items():
                w = concat(w1, w2)
                atoms[w] = atoms.get(w, Fraction(0)) + a * b
                if w not in reps:
                    reps[w] = m1 @ nu.reps[w2]
        if len(atoms) > cap:
            raise ResourceCapError(f"support {len(atoms)} exceeds cap {cap}")
        return AtomicMeasure(mu.kind, "word", atoms, gens=mu.gens, reps=reps)
    if abs(mu.resolution - nu.resolution) > 1e-15:
        raise ValueError("matrix measures at different resolutions")
    for k1, a in mu.atoms.items():
        m1 = mu.reps[k1]
        for k2, b in nu.atoms.items():
            m = m1 @ nu.reps[k2]
            key = _quantize(m, mu.resolution)
            atoms[key] = atoms.get(key, 0.0) + a * b
            reps.setdefault(key, m)
    if len(atoms) > cap:
        raise ResourceCapError(f"support {len(atoms)} exceeds cap {cap}")
    return AtomicMeasure(mu.kind, "quantized_matrix", atoms, resolution=mu.resolution, reps=reps)


def power(mu: AtomicMeasure, n: int, cap: int = DEFAULT_ATOM_CAP) -> AtomicMeasure:
    """n-fold convolution power; n = 0 is the point mass at the identity."""
    if n < 0:
        raise ValueError("negative convolution power")
    if n == 0:
        if mu.key_mode == "word":
            eye = np.eye(2, dtype=complex if mu.kind == SU2 else float)
            return AtomicMeasure(
                mu.kind, "word", {EMPTY: Fraction(1)}, gens=mu.gens, reps={EMPTY: eye}
            )
        eye = np.eye(2, dtype=complex if mu.kind == SU2 else float)
        key = _quantize(eye, mu.resolution)
        return AtomicMeasure(
            mu.kind, "quantized_matrix", {key: 1.0}, resolution=mu.resolution, reps={key: eye}
        )
    out = mu
    for _ in range(n - 1):
        out = convolve(out, mu, cap=cap)
    return out


@dataclass(frozen=True)
class ReturnRow:
    n: int
    probability: Fraction
    kesten: float


def return_probability_curve(
    gens: GeneratorSet, n_max: int, cap: int = DEFAULT_ATOM_CAP
) -> list[ReturnRow]:
    """Exact mu^{*n}({e}) for the uniform symmetric word measure, n <= n_max."""
    mu = symmetrize(gens, key_mode="word")
    rows = []
    cur = mu
    for n in range(1, n_max + 1):
        if n > 1:
            cur = convolve(cur, mu, cap=cap)
        rows.append(ReturnRow(n, cur.atoms.get(EMPTY, Fraction(0)), kesten_bound(gens.k, n)))
    return rows


def free_return_probability(k: int, n: int) -> Fraction:
    """Return probability of the uniform walk on F_k after n steps, exactly.

    The distance from the start is a birth-death chain: from d >= 1 it
    moves up with probability (2k-1)/2k and down with probability 1/2k,
    and from 0 it always moves up.  Lumping isometry classes this way is
    exact, so the value agrees with full word enumeration wherever that
    is feasible.
    """
    if k < 1 or n < 0:
        raise ValueError("need k >= 1, n >= 0")
    up = Fraction(2 * k - 1, 2 * k)
    down = Fraction(1, 2 * k)
    dist = {0: Fraction(1)}
    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for d, p in dist.items():
            if d == 0:
                nxt[1] = nxt.get(1, Fraction(0)) + p
            else:
                nxt[d + 1] = nxt.get(d + 1, Fraction(0)) + p * up
                nxt[d - 1] = nxt.get(d - 1, Fraction(0)) + p * down
        dist = nxt
    return dist.get(0, Fraction(0))


# --- distance to one-parameter subgroups -------------------------------------

_FAMILIES_SL2R = ("rotation", "diagonal", "upper_triangular", "unipotent")
_FAMILIES_SU2 = ("diagonal",)


@dataclass(frozen=True)
class SubgroupSpec:
    """Reference subgroup: a chart family, optionally conjugated.

    Families on SL(2,R): "rotation" (SO(2)), "diagonal" (positive Cartan),
    "upper_triangular" (Borel, two parameters), "unipotent" (upper shear).
    On SU(2): "diagonal" (the maximal torus).  `conjugator` h replaces the
    family F by h F h^{-1}.
    """

    family: str
    conjugator: Optional[GroupElement] = None

    def validate(self, kind: str) -> None:
        allowed = _FAMILIES_SL2R if kind == SL2R else _FAMILIES_SU2
        if self.family not in allowed:
            raise ValueError(f"family {self.family!r} not available on {kind}")
        if self.conjugator is not None and self.conjugator.kind != kind:
            raise ValueError("conjugator lives in the wrong group")

    def label(self) -> str:
        base = self.family
        if self.conjugator is not None:
            base += "~conj"
        return base


def _golden_refine(f, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    """Vectorized golden-section minimum of f over per-row brackets."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a = lo.copy()
    b = hi.copy()
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = f(c)
    fd = f(d)
    # enough iterations to shrink any desk-scale bracket below tol
    iters = max(1, int(math.ceil(math.log(max(tol, 1e-15) / max(float(np.max(b - a)), tol)) / math.log(invphi))))
    for _ in range(min(iters, 120)):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = f(c)
        fd = f(d)
    t = (a + b) / 2.0
    return t


def _multistart_min(f, lo: float, hi: float, n_atoms: int, starts: int = 32, tol: float = 1e-8):
    """Min over a 1-parameter family, 32-start grid then golden refinement."""
    grid = np.linspace(lo, hi, starts)
    vals = np.stack([f(np.full(n_atoms, t)) for t in grid])  # (starts, atoms)
    best = np.argmin(vals, axis=0)
    step = (hi - lo) / (starts - 1)
    lo_arr = grid[best] - step
    hi_arr = grid[best] + step
    t = _golden_refine(f, lo_arr, hi_arr, tol)
    return np.minimum(f(t), vals.min(axis=0))


def subgroup_distance_sq(matrices: np.ndarray, spec: SubgroupSpec, kind: str) -> np.ndarray:
    """Squared HS distance from each matrix to the reference subgroup."""
    spec.validate(kind)
    m = np.asarray(matrices)
    if m.ndim == 2:
        m = m[None]
    n = m.shape[0]
    if spec.conjugator is not None:
        h = spec.conjugator.matrix
        hinv = spec.conjugator.inverse().matrix
    else:
        h = hinv = None

    def fam(t: np.ndarray) -> np.ndarray:
        return _family_matrices(spec.family, kind, t)

    def objective(t: np.ndarray) -> np.ndarray:
        ft = fam(t)  # (n, 2, 2)
        if h is not None:
            ft = np.einsum("ab,nbc,cd->nad", h, ft, hinv)
        return np.sum(np.abs(m - ft) ** 2, axis=(1, 2))

    norms = np.sum(np.abs(m) ** 2, axis=(1, 2))
    if spec.conjugator is None:
        if kind == SL2R and spec.family == "rotation":
            s = np.sqrt((m[:, 0, 0] + m[:, 1, 1]) ** 2 + (m[:, 1, 0] - m[:, 0, 1]) ** 2)
            return np.maximum(norms + 2.0 - 2.0 * s, 0.0)
        if kind == SL2R and spec.family == "unipotent":
            return (m[:, 0, 0] - 1) ** 2 + (m[:, 1, 1] - 1) ** 2 + m[:, 1, 0] ** 2
        if kind == SU2 and spec.family == "diagonal":
            a = m[:, 0, 0]
            b = m[:, 1, 1]
            s = np.sqrt((a.real + b.real) ** 2 + (a.imag - b.imag) ** 2)
            off = np.abs(m[:, 0, 1]) ** 2 + np.abs(m[:, 1, 0]) ** 2
            return np.maximum(norms - off + 2.0 - 2.0 * s, 0.0) + off
    if kind == SL2R and spec.family == "upper_triangular":
        return _borel_distance_sq(m, h, hinv)
    # golden-section families: diagonal (Cartan), conjugated variants, SU2 torus
    scale = float(np.sqrt(np.max(norms)))
    if kind == SU2 or spec.family == "rotation":
        lo, hi = 0.0, 2.0 * math.pi
    else:
        big = math.log(max(scale + 2.0, 4.0))
        lo, hi = -big, big
    return _multistart_min(objective, lo, hi, n)


def _family_matrices(family: str, kind: str, t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    if kind == SU2:
        out = np.zeros((n, 2, 2), dtype=complex)
        out[:, 0, 0] = np.exp(1j * t)
        out[:, 1, 1] = np.exp(-1j * t)
        return out
    out = np.zeros((n, 2, 2))
    if family == "rotation":
        out[:, 0, 0] = np.cos(t)
        out[:, 0, 1] = -np.sin(t)
        out[:, 1, 0] = np.sin(t)
        out[:, 1, 1] = np.cos(t)
    elif family == "diagonal":
        out[:, 0, 0] = np.exp(t)
        out[:, 1, 1] = np.exp(-t)
    elif family == "unipotent":
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        out[:, 0, 1] = t
    else:
        raise ValueError(f"no 1-parameter chart for {family!r}")
    return out


def _borel_distance_sq(m: np.ndarray, h, hinv) -> np.ndarray:
    """Distance to the Borel subgroup [[a, b], [0, 1/a]]; b eliminated in closed form."""
    n = m.shape[0]
    if h is None:
        e_mat = np.array([[0.0, 1.0], [0.0, 0.0]])
    else:
        e_mat = h @ np.array([[0.0, 1.0], [0.0, 0.0]]) @ hinv
    e_norm_sq = float(np.sum(e_mat**2))

    def residual(a: np.ndarray, sign: float) -> np.ndarray:
        aa = sign * np.exp(a)
        diag = np.zeros((a.shape[0], 2, 2))
        diag[:, 0, 0] = aa
        diag[:, 1, 1] = 1.0 / aa
        if h is not None:
            diag = np.einsum("ab,nbc,cd->nad", h, diag, hinv)
        r = m - diag
        proj = np.einsum("nab,ab->n", r, e_mat) / e_norm_sq
        return np.sum((r - proj[:, None, None] * e_mat) ** 2, axis=(1, 2))

    scale = math.log(max(float(np.sqrt(np.max(np.sum(m**2, axis=(1, 2))))) + 2.0, 4.0))
    pos = _multistart_min(lambda a: residual(a, +1.0), -scale, scale, n)
    neg = _multistart_min(lambda a: residual(a, -1.0), -scale, scale, n)
    return np.minimum(pos, neg)


def mass_near_subgroup(mu: AtomicMeasure, spec: SubgroupSpec, delta: float) -> float:
    """Total weight of atoms within HS distance delta of the subgroup."""
    if delta < 0:
        raise ValueError("negative delta")
    if mu.size == 0:
        return 0.0
    d2 = subgroup_distance_sq(mu.matrices(), spec, mu.kind)
    w = mu.weights_array()
    return float(np.sum(w[d2 <= delta * delta]))


def support_radius(mu: AtomicMeasure, metric: str = "defining") -> float:
    return mu.support_radius(metric=metric)
