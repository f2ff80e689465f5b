"""Construction of a free generating set near the identity by pigeonhole.

Start from a base alphabet S of M elements, form the no-backtracking words
w = s_1...s_ell with s_1 = a and s_ell = b, cube them (z = w^3 stays
reduced because b followed by a never cancels), and bucket the cube
matrices at a fixed quantization resolution.  Any bucket with at least
two members yields T = g0^{-1}(bucket) minus the identity: a set of
elements close to the identity that still carries long reduced words
over S.  Word length bookkeeping (n*ell <= |g|_S <= 6*n*ell for products
of n elements of T) is verified by exact word arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    adjoint_matrix,
    hs_distance,
)
from .groups import _adjoint_su2  # 3-dim real rotation image of SU(2)
from .measures import (
    AtomicMeasure,
    SubgroupSpec,
    convolve,
    mass_near_subgroup,
    power,
    symmetrize,
)
from .rng import stream
from .words import ResourceCapError, WordTuple, concat, invert, word_length

DEFAULT_SAMPLE_CAP = 200_000


@dataclass(frozen=True)
class EscapeConfig:
    """Parameters of the bucket construction.

    `eta` fixes the nominal scale eps = (1+eta)^(-ell); the bucket
    resolution defaults to eps/10 but is normally set explicitly, since
    the measured radius of T is what matters downstream.
    """

    base: GeneratorSet
    ell: int
    a: int = 0
    b: int = 1
    eta: float = 0.1
    bucket_resolution: Optional[float] = None
    sample_cap: int = DEFAULT_SAMPLE_CAP
    seed: int = 0

    def __post_init__(self) -> None:
        if self.ell < 4:
            raise ValueError("need word length ell >= 4")
        if self.a == self.b:
            raise ValueError("endpoint letters must differ")
        k = self.base.k
        if not (0 <= self.a < k and 0 <= self.b < k):
            raise ValueError("endpoint letter index out of range")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.bucket_resolution is not None and self.bucket_resolution <= 0:
            raise ValueError("bucket resolution must be positive")
        if self.sample_cap < 2:
            raise ValueError("sample cap too small")

    @property
    def eps_nominal(self) -> float:
        return (1.0 + self.eta) ** (-self.ell)

    @property
    def resolution(self) -> float:
        if self.bucket_resolution is not None:
            return self.bucket_resolution
        return self.eps_nominal / 10.0


# Letters are encoded as 2*generator + (0 for +1, 1 for -1); the inverse
# of code c is c ^ 1.


def _decode(codes: np.ndarray) -> WordTuple:
    return tuple((int(c) // 2, 1 if int(c) % 2 == 0 else -1) for c in codes)


def count_Y(M: int, a: int, b: int, ell: int) -> int:
    """Number of no-backtracking words s_1...s_ell with s_1 = a, s_ell = b."""
    if a == b:
        raise ValueError("endpoint letters must differ")
    if ell < 3:
        raise ValueError("need ell >= 3")
    return _suffix_counts(M, b, ell)[1][2 * a]


def _successors(M: int, code: int) -> list[int]:
    return [c for c in range(2 * M) if c != code ^ 1]


def _suffix_counts(M: int, b: int, ell: int) -> list[list[int]]:
    """counts[t][c] = number of admissible completions from letter c at
    position t (1-based) to the fixed final letter b at position ell."""
    target = 2 * b
    counts = [[0] * (2 * M) for _ in range(ell + 1)]
    for c in range(2 * M):
        counts[ell][c] = 1 if c == target else 0
    for t in range(ell - 1, 0, -1):
        for c in range(2 * M):
            counts[t][c] = sum(counts[t + 1][s] for s in _successors(M, c))
    return counts


@dataclass(frozen=True)
class YSample:
    codes: np.ndarray  # (N, ell) int8 letter codes
    total: int
    sampled: bool
    seed: int


def build_Y(cfg: EscapeConfig) -> YSample:
    """All words of Y, or a seeded uniform subsample past the cap.

    Words are indexed in lexicographic letter-code order; subsampling
    draws sorted distinct ranks, so the result is deterministic in
    (cfg, seed) and independent of any thread schedule.
    """
    M = cfg.base.k
    counts = _suffix_counts(M, cfg.b, cfg.ell)
    start = 2 * cfg.a
    total = counts[1][start]
    if total == 0:
        raise ValueError("no admissible words; endpoints incompatible with ell")
    if total >= 2**62:
        raise ResourceCapError("word ranks exceed exact integer range; lower ell")
    sampled = total > cfg.sample_cap
    if sampled:
        rng = stream(cfg.seed, "escape.Y")
        want = cfg.sample_cap
        # oversample, dedupe, trim: deterministic and memory-light
        ranks = np.array([], dtype=np.int64)
        while ranks.size < want:
            extra = rng.integers(0, total, size=int(want * 1.3))
            ranks = np.unique(np.concatenate([ranks, extra]))
        ranks = ranks[np.sort(rng.choice(ranks.size, size=want, replace=False))]
    else:
        ranks = np.arange(total, dtype=np.int64)
    codes = _unrank(M, cfg.ell, counts, start, ranks)
    return YSample(codes=codes, total=total, sampled=sampled, seed=cfg.seed)


def _unrank(M: int, ell: int, counts, start: int, ranks: np.ndarray) -> np.ndarray:
    """Lexicographic rank -> letter codes, vectorized over all ranks."""
    n = ranks.size
    codes = np.empty((n, ell), dtype=np.int8)
    codes[:, 0] = start
    rem = ranks.astype(np.int64).copy()
    for t in range(1, ell):
        last = codes[:, t - 1]
        for c in range(2 * M):
            idx = np.nonzero(last == c)[0]
            if idx.size == 0:
                continue
            succ = np.array(
                [s for s in _successors(M, c) if counts[t + 1][s] > 0], dtype=np.int8
            )
            cum = np.cumsum([counts[t + 1][int(s)] for s in succ]).astype(np.int64)
            r = rem[idx]
            digit = np.searchsorted(cum, r, side="right")
            codes[idx, t] = succ[digit]
            lower = np.where(digit > 0, cum[np.maximum(digit - 1, 0)], 0)
            rem[idx] = r - lower
    return codes


def _letter_table(gens: GeneratorSet) -> np.ndarray:
    dtype = complex if gens.kind == SU2 else float
    table = np.empty((2 * gens.k, 2, 2), dtype=dtype)
    for i, g in enumerate(gens.elements):
        table[2 * i] = g.matrix
        table[2 * i + 1] = g.inverse().matrix
    return table


def _eval_codes(table: np.ndarray, codes: np.ndarray, repeat: int = 1) -> np.ndarray:
    out = table[codes[:, 0]].copy()
    first = True
    for _ in range(repeat):
        for t in range(codes.shape[1]):
            if first:
                first = False
                continue
            out = out @ table[codes[:, t]]
    return out


def _quantize_batch(mats: np.ndarray, resolution: float) -> np.ndarray:
    if np.iscomplexobj(mats):
        flat = np.concatenate([mats.real.reshape(len(mats), 4), mats.imag.reshape(len(mats), 4)], axis=1)
    else:
        flat = mats.reshape(len(mats), 4)
    return np.round(flat / resolution).astype(np.int64)


@dataclass(frozen=True)
class EscapeReport:
    total_Y: int
    sample_size: int
    sampled: bool
    bucket_size: int
    t_size: int
    epsilon_prime: float
    resolution: float
    ell: int
    g0_word: WordTuple


def build_T(cfg: EscapeConfig) -> tuple[GeneratorSet, EscapeReport]:
    """Pigeonhole step: densest bucket of cubes, pulled back by its first member.

    Every element of the returned set carries its reduced word over the
    base alphabet (length between 4*ell + 2 and 6*ell) and the measured
    radius eps' = max dist(t, 1) is recorded as radius_eps.
    """
    ys = build_Y(cfg)
    table = _letter_table(cfg.base)
    cubes = _eval_codes(table, ys.codes, repeat=3)
    keys = _quantize_batch(cubes, cfg.resolution)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    dense = int(np.argmax(counts))
    rows = np.nonzero(inverse == dense)[0]
    if rows.size < 2:
        raise ValueError(
            f"densest bucket is a singleton ({ys.codes.shape[0]} cubes at "
            f"resolution {cfg.resolution:g}); increase ell or the resolution"
        )
    g0_row = int(rows[0])
    g0 = cubes[g0_row]
    if cfg.base.kind == SU2:
        g0_inv = g0.conj().T
    else:
        g0_inv = np.array([[g0[1, 1], -g0[0, 1]], [-g0[1, 0], g0[0, 0]]])
    w0 = _decode(ys.codes[g0_row])
    w0_cube_inv = invert(concat(concat(w0, w0), w0))
    elements = []
    for r in rows[1:]:
        m = g0_inv @ cubes[int(r)]
        if np.abs(m - np.eye(2)).max() <= 1e-9:
            continue
        w = _decode(ys.codes[int(r)])
        word = concat(w0_cube_inv, concat(concat(w, w), w))
        g = GroupElement(cfg.base.kind, m, word=word)
        if any(hs_distance(g, h) <= 1e-12 for h in elements):
            continue
        elements.append(g)
    if not elements:
        raise ValueError("bucket collapsed to the identity; increase ell or the resolution")
    eps_prime = max(g.hs_norm() for g in elements)
    T = GeneratorSet(tuple(elements), freeness="assumed", radius_eps=eps_prime)
    report = EscapeReport(
        total_Y=ys.total,
        sample_size=int(ys.codes.shape[0]),
        sampled=ys.sampled,
        bucket_size=int(rows.size),
        t_size=len(elements),
        epsilon_prime=eps_prime,
        resolution=cfg.resolution,
        ell=cfg.ell,
        g0_word=w0,
    )
    return T, report


# --- word-length bookkeeping -------------------------------------------------


@dataclass(frozen=True)
class Claim1Report:
    ell: int
    n_max: int
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_claim1(T: GeneratorSet, ell: int, n_max: int, cap: int = 1_000_000) -> Claim1Report:
    """Check n*ell <= |g|_S <= 6*n*ell over all reduced T-words, n <= n_max."""
    from .words import count_reduced_words, enumerate_reduced_words

    labels = [g.word for g in T.elements]
    if any(w is None for w in labels):
        raise ValueError("elements of T lack base-alphabet word labels")
    k = T.k
    total = sum(count_reduced_words(k, n) for n in range(1, n_max + 1))
    if total > cap:
        raise ResourceCapError(f"{total} words exceed cap {cap}")
    inv_labels = [invert(w) for w in labels]
    violations = []
    checked = 0
    for n in range(1, n_max + 1):
        for w in enumerate_reduced_words(k, n):
            s_word: WordTuple = ()
            for i, s in w:
                s_word = concat(s_word, labels[i] if s == 1 else inv_labels[i])
            L = word_length(s_word)
            checked += 1
            if not (n * ell <= L <= 6 * n * ell):
                violations.append((w, L, n * ell, 6 * n * ell))
    return Claim1Report(ell=ell, n_max=n_max, checked=checked, violations=violations)


@dataclass(frozen=True)
class StabilizerReport:
    fixed: int
    total: int

    @property
    def ratio(self) -> float:
        return self.fixed / self.total if self.total else 0.0


def stabilizer_count(
    T: GeneratorSet,
    v: Sequence[float],
    n: int,
    rep: str = "adjoint",
    tol: float = 1e-8,
    cap: int = 1_000_000,
) -> StabilizerReport:
    """Count reduced T-words of length n fixing the line [v] in the 3-dim
    adjoint representation (sine of the angle between rho(g)v and the line
    through v below tol)."""
    from .words import count_reduced_words, enumerate_reduced_words

    if rep != "adjoint":
        raise ValueError(f"unknown representation {rep!r}")
    total = count_reduced_words(T.k, n)
    if total > cap:
        raise ResourceCapError(f"{total} words exceed cap {cap}")
    vv = np.asarray(v, dtype=float)
    nv = np.linalg.norm(vv)
    if nv == 0:
        raise ValueError("zero vector has no projective class")
    vv = vv / nv
    ad = []
    for g in T.elements:
        m = adjoint_matrix(g) if T.kind == SL2R else _adjoint_su2(g.matrix)
        ad.append((m, np.linalg.inv(m)))
    fixed = 0
    for w in enumerate_reduced_words(T.k, n):
        rho = np.eye(3)
        for i, s in w:
            rho = rho @ (ad[i][0] if s == 1 else ad[i][1])
        img = rho @ vv
        # sine of the projective angle; acos of the cosine loses half the
        # significant digits right where exact fixing lands
        rej = img - float(img @ vv) * vv
        if np.linalg.norm(rej) < tol * np.linalg.norm(img):
            fixed += 1
    return StabilizerReport(fixed=fixed, total=total)


# --- escape curves -----------------------------------------------------------


@dataclass(frozen=True)
class EscapeRow:
    n: int  # the measure is mu^{*2n}
    delta: float
    subgroup: str
    mass: float


def escape_curve(
    T: GeneratorSet,
    H: SubgroupSpec,
    deltas: Sequence[float],
    n_max: int,
    cap: int = 2_000_000,
) -> list[EscapeRow]:
    """Rows (n, delta, mu^{*2n}(H^(delta))) for the uniform measure on T."""
    alphabet = GeneratorSet(
        tuple(GroupElement(g.kind, g.matrix) for g in T.elements),
        freeness="assumed",
    )
    mu = symmetrize(alphabet, key_mode="word")
    label = H.label()
    rows = [EscapeRow(0, float(d), label, 1.0) for d in deltas]
    mu2 = convolve(mu, mu, cap=cap)
    cur = mu2
    for n in range(1, n_max + 1):
        if n > 1:
            cur = convolve(convolve(cur, mu, cap=cap), mu, cap=cap)
        for d in deltas:
            rows.append(EscapeRow(n, float(d), label, mass_near_subgroup(cur, H, float(d))))
    return rows


def fit_escape_exponent(rows: Sequence[EscapeRow]) -> float:
    """Slope of log(mass) against log(delta) on the deepest-n rows."""
    n_top = max(r.n for r in rows)
    pts = [(r.delta, r.mass) for r in rows if r.n == n_top and r.mass > 0 and r.delta > 0]
    if len(pts) < 2:
        return float("nan")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])
