"""Local and restricted spectral-gap estimation on windowed nets.

The quadratic form Q(F) = sum_g ||g.F - F||^2 / ||F||^2 over weighted
mean-zero F is the numerically natural object: its minimum over the net
gives the local-gap constant kappa = 1/sqrt(min Q), and the same number
serves the sum-of-norms convention since sum_g x_g >= sqrt(sum_g x_g^2)
for nonnegative x_g.  The delayed bounded walk applies a generator where
the window permits and stays put otherwise, so its rows are exactly
stochastic; expansion is probed by adversarial descent over cell subsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .groups import SL2R, GeneratorSet, GroupElement, hs_distance
from .nets import IntervalNet
from .operators import DENSE_CELL_CAP, LinearOperator, op_measure, op_translate
from .rng import stream

__all__ = [
    "GapReport",
    "local_gap_estimate",
    "RestrictedGapReport",
    "restricted_gap",
    "delayed_walk_operator",
    "walk_spectrum",
    "deflated_abs_max",
    "walk_gap",
    "ExpandRow",
    "MonotoneCheck",
    "ExpansionReport",
    "set_expansion_ratio",
    "expansion_test",
]

GAP_FORMULA = "kappa = 1/sqrt(min Q), Q(F) = sum_g ||g.F - F||^2 / ||F||^2"


def _elements_of(S) -> list[GroupElement]:
    if isinstance(S, GeneratorSet):
        return list(S.elements)
    elements = list(S)
    if not elements:
        raise ValueError("empty generator collection")
    kinds = {g.kind for g in elements}
    if len(kinds) != 1:
        raise ValueError(f"mixed group kinds {kinds}")
    return elements


def _wnorm(w: np.ndarray, f: np.ndarray) -> float:
    return math.sqrt(float(np.sum(w * f * f)))


@dataclass
class GapReport:
    """Minimum of the gap quadratic form and the derived constants.

    kappa_estimate applies to the squared-sum convention; kappa_sum_form
    is the constant valid for the plain sum of norms, equal here because
    sum_g x_g >= sqrt(sum_g x_g^2).  minimizer is weighted mean-zero.
    """

    min_quotient: float
    kappa_estimate: float
    kappa_sum_form: float
    minimizer: np.ndarray
    deflated_dimension: int
    residual: float
    formula: str = GAP_FORMULA

    @property
    def no_gap(self) -> bool:
        return not math.isfinite(self.kappa_estimate)


def local_gap_estimate(S, net) -> GapReport:
    """Smallest Rayleigh quotient of Q over weighted mean-zero functions.

    Solved as a symmetric eigenproblem: with W the weight diagonal, the
    form matrix is pushed to W^{-1/2} Q W^{-1/2} and the constant
    direction is shifted far up the spectrum instead of being projected
    out, so the bottom eigenpair is the deflated minimizer.
    """
    elements = _elements_of(S)
    n = net.size
    if n < 2:
        raise ValueError("a single-cell net carries no mean-zero functions")
    if n > DENSE_CELL_CAP:
        raise ValueError(f"{n} cells exceed the dense cap {DENSE_CELL_CAP}")
    w = net.weights
    parts = [op_translate(g, net) for g in elements]
    if all(p.clipped_fraction >= 1.0 - 1e-12 for p in parts):
        raise ValueError("no translate overlaps the window; the form is blind")
    Q = np.zeros((n, n))
    eye = np.eye(n)
    for p in parts:
        D = p.to_dense() - eye
        Q += D.T @ (w[:, None] * D)
    Q = 0.5 * (Q + Q.T)
    rw = np.sqrt(w)
    B = Q / np.outer(rw, rw)
    u = rw / np.linalg.norm(rw)
    shift = 2.0 * float(np.linalg.norm(B, "fro")) + 1.0
    vals, vecs = scipy.linalg.eigh(B + shift * np.outer(u, u))
    min_q = max(float(vals[0]), 0.0)
    y = vecs[:, 0]
    y = y - float(y @ u) * u
    F = y / rw
    nF = _wnorm(w, F)
    if nF > 0:
        F = F / nF
    achieved = sum(_wnorm(w, p.matvec(F) - F) ** 2 for p in parts)
    kappa = math.inf if min_q < 1e-12 else 1.0 / math.sqrt(min_q)
    return GapReport(
        min_quotient=min_q,
        kappa_estimate=kappa,
        kappa_sum_form=kappa,
        minimizer=F,
        deflated_dimension=n - 1,
        residual=abs(achieved - min_q),
    )


@dataclass
class RestrictedGapReport:
    """Weighted singular spectrum of T_mu split at the threshold r."""

    dim_v: int
    residual: float
    threshold: float
    degenerate: bool
    singular_values: np.ndarray


def restricted_gap(mu, net, r: float) -> RestrictedGapReport:
    """dim of V = span of singular directions with value >= r, plus the
    largest singular value on the complement (< r by construction)."""
    if not 0.0 < r < 1.0:
        raise ValueError("threshold r must lie in (0, 1)")
    A = op_measure(mu, net).to_dense()
    rw = np.sqrt(net.weights)
    M = (rw[:, None] * A) / rw[None, :]
    sv = np.linalg.svd(M, compute_uv=False)
    above = sv >= r
    dim_v = int(above.sum())
    rest = sv[~above]
    residual = float(rest.max()) if rest.size else 0.0
    return RestrictedGapReport(
        dim_v=dim_v,
        residual=residual,
        threshold=r,
        degenerate=dim_v == net.size,
        singular_values=sv,
    )


def delayed_walk_operator(S, net) -> LinearOperator:
    """P_S F = (1/k) sum_i (1_{B and g_i B} g_i.F + 1_{B minus g_i B} F).

    A particle at x moves to g_i^{-1} x when that point stays in the
    window and waits otherwise, so every row sums to exactly one.  A
    GeneratorSet is closed under inverses first; an explicit element
    sequence must already be symmetric.
    """
    if isinstance(S, GeneratorSet):
        elements = S.symmetric_elements()
    else:
        elements = _elements_of(S)
        mats = [g.matrix for g in elements]
        for g in elements:
            inv = g.inverse().matrix
            if not any(np.abs(inv - m).max() < 1e-9 for m in mats):
                raise ValueError("element collection is not closed under inverses")
    n = net.size
    if n > DENSE_CELL_CAP:
        raise ValueError(f"{n} cells exceed the dense cap {DENSE_CELL_CAP}")
    k = len(elements)
    P = np.zeros((n, n))
    rows = np.arange(n)
    disjoint = []
    for g in elements:
        images = np.einsum("ab,nbc->nac", g.inverse().matrix, net.centers)
        idx, dist = net.nearest_with_distance(images)
        keep = dist <= net.spacing * 1.5 + 1e-12
        np.add.at(P, (rows[keep], idx[keep]), 1.0 / k)
        np.add.at(P, (rows[~keep], rows[~keep]), 1.0 / k)
        disjoint.append(not keep.any())
    op = LinearOperator.from_dense(net, P, label="PS")
    op.k = k
    op.disjoint_atoms = disjoint
    op.row_sum_defect = float(np.abs(P.sum(axis=1) - 1.0).max())
    return op


def walk_spectrum(op: LinearOperator) -> tuple[np.ndarray, float]:
    """Complex spectrum of the walk matrix, sorted by real part, plus the
    relative defect of its weighted symmetrization.

    Row stochasticity confines every eigenvalue to the closed unit disk,
    and each fully displaced atom contributes a diagonal floor 1/k that
    lifts real parts toward -1 + 2m/k.  The defect measures how far the
    nearest-cell discretization sits from weighted self-adjointness; it
    shrinks with the net spacing but enters no spectral bound.
    """
    P = op.to_dense()
    rw = np.sqrt(op.net.weights)
    M = (rw[:, None] * P) / rw[None, :]
    defect = float(np.linalg.norm(M - M.T, "fro") /
                   max(np.linalg.norm(M, "fro"), 1e-300))
    return np.sort_complex(np.linalg.eigvals(P)), defect


def deflated_abs_max(op: LinearOperator, tol: float = 1e-8,
                     max_iter: int = 5000, seed: int = 0) -> float:
    """Largest |eigenvalue| of a walk operator away from its stationary
    pair, by power iteration with Perron deflation.

    The constant function spans the lone modulus-one eigendirection; its
    spectral projector is oblique, so deflation removes the component
    along 1 measured against the left stationary vector rather than the
    cell weights.  Growth factors are averaged geometrically over a
    trailing window, which keeps the estimate stable when the dominant
    remaining eigenvalues form a complex pair.
    """
    P = op.to_dense()
    n = op.size
    one = np.ones(n)
    pi = op.net.weights / op.net.weights.sum()
    for _ in range(max_iter):
        # damped update so periodic chains still settle on a fixed vector
        nxt = 0.5 * (pi + P.T @ pi)
        nxt /= nxt.sum()
        done = np.abs(nxt - pi).max() <= 1e-15
        pi = nxt
        if done:
            break
    def deflate(x):
        return x - (pi @ x) / (pi @ one) * one
    rng = stream(seed, "walk.deflate")
    v = deflate(rng.standard_normal(n))
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return 0.0
    v /= nv
    window = 64
    acc, steps = 0.0, 0
    est = None
    for _ in range(max_iter):
        v = deflate(P @ v)
        growth = float(np.linalg.norm(v))
        if growth == 0.0:
            return 0.0
        v /= growth
        acc += math.log(growth)
        steps += 1
        if steps == window:
            cur = math.exp(acc / window)
            if est is not None and abs(cur - est) <= tol * max(cur, 1.0):
                return cur
            est, acc, steps = cur, 0.0, 0
    return est if est is not None else math.exp(acc / max(steps, 1))


def walk_gap(S, net) -> float:
    """1 minus the deflated spectral radius of the delayed walk."""
    return 1.0 - deflated_abs_max(delayed_walk_operator(S, net))


@dataclass(frozen=True)
class ExpandRow:
    trial: int
    set_size: int
    image_measure: float
    ratio: float


@dataclass(frozen=True)
class MonotoneCheck:
    element_index: int
    checked_cells: int
    increasing: bool


@dataclass
class ExpansionReport:
    kappa_hat: float
    worst_set: np.ndarray
    rows: list
    monotone: list
    monotone_ok: bool


def _image_maps(elements, net):
    """Per generator: target cell of every source cell, -1 when the image
    leaves the window."""
    maps = []
    if isinstance(net, IntervalNet):
        x = net.centers
        for g in elements:
            a, b = g.matrix[0]
            c, d = g.matrix[1]
            den = c * x + d
            ok = np.abs(den) > 1e-14
            y = np.full_like(x, np.inf)
            y[ok] = (a * x[ok] + b) / den[ok]
            inside = ok & (y >= 0.0) & (y <= 1.0)
            tgt = np.where(inside, net.nearest(np.where(inside, y, 0.0)), -1)
            maps.append(tgt)
        return maps
    for g in elements:
        images = np.einsum("ab,nbc->nac", g.matrix, net.centers)
        idx, dist = net.nearest_with_distance(images)
        keep = dist <= net.spacing * 1.5 + 1e-12
        maps.append(np.where(keep, idx, -1))
    return maps


def _ratio(maps, weights, mask: np.ndarray) -> tuple[float, float]:
    base = float(weights[mask].sum())
    image = np.zeros(weights.shape[0], dtype=bool)
    for tgt in maps:
        sel = tgt[mask]
        sel = sel[sel >= 0]
        image[sel] = True
    measure = float(weights[image].sum())
    return measure, measure / base


def set_expansion_ratio(S, net, indices) -> float:
    """|(union_g g.A) intersect B| / |A| for an explicit cell subset."""
    elements = _elements_of(S)
    mask = np.zeros(net.size, dtype=bool)
    mask[np.asarray(indices, dtype=int)] = True
    if not mask.any():
        raise ValueError("empty cell subset")
    return _ratio(_image_maps(elements, net), net.weights, mask)[1]


def expansion_test(S, net, trials: int = 20, adversarial_rounds: int = 200,
                   seed: int = 0, candidates: int = 32) -> ExpansionReport:
    """kappa_hat = min over tested A of |(union g.A) cap B|/|A| - 1.

    Random subsets of at most half the window seed a greedy descent that
    accepts the best of `candidates` single-cell swaps per round.  On the
    projective line every generator within 0.1 of the identity also gets
    its restricted Moebius map checked for monotone increase.
    """
    elements = _elements_of(S)
    n = net.size
    if n < 2:
        raise ValueError("expansion needs at least two cells")
    maps = _image_maps(elements, net)
    w = net.weights
    half_mass = 0.5 * float(w.sum())
    rng = stream(seed, "expand")
    rows = []
    worst_ratio = math.inf
    worst = None
    for t in range(trials):
        size = int(rng.integers(1, n // 2 + 1))
        mask = np.zeros(n, dtype=bool)
        mask[rng.choice(n, size=size, replace=False)] = True
        while w[mask].sum() > half_mass:
            on = np.flatnonzero(mask)
            mask[on[int(rng.integers(0, on.size))]] = False
        measure, ratio = _ratio(maps, w, mask)
        rows.append(ExpandRow(t, int(mask.sum()), measure, ratio))
        if ratio < worst_ratio:
            worst_ratio = ratio
            worst = mask.copy()
    mask = worst.copy()
    current = worst_ratio
    for _ in range(adversarial_rounds):
        on = np.flatnonzero(mask)
        off = np.flatnonzero(~mask)
        if on.size == 0 or off.size == 0:
            break
        best_pair = None
        best_ratio = current
        for _ in range(candidates):
            a = int(on[int(rng.integers(0, on.size))])
            b = int(off[int(rng.integers(0, off.size))])
            mask[a] = False
            mask[b] = True
            if w[mask].sum() <= half_mass:
                ratio = _ratio(maps, w, mask)[1]
                if ratio < best_ratio:
                    best_ratio = ratio
                    best_pair = (a, b)
            mask[a] = True
            mask[b] = False
        if best_pair is None:
            continue
        a, b = best_pair
        mask[a] = False
        mask[b] = True
        current = best_ratio
    if current < worst_ratio:
        worst_ratio = current
        worst = mask
    checks = []
    if isinstance(net, IntervalNet):
        identity = GroupElement.identity(elements[0].kind)
        for i, g in enumerate(elements):
            if hs_distance(g, identity) > 0.1:
                continue
            a, b = g.matrix[0]
            c, d = g.matrix[1]
            den = c * net.centers + d
            ok = np.abs(den) > 1e-14
            y = np.full_like(net.centers, np.inf)
            y[ok] = (a * net.centers[ok] + b) / den[ok]
            defined = ok & (y >= 0.0) & (y <= 1.0)
            vals = y[defined]
            checks.append(MonotoneCheck(i, int(defined.sum()),
                                        bool((np.diff(vals) > 0).all())))
    return ExpansionReport(
        kappa_hat=worst_ratio - 1.0,
        worst_set=np.flatnonzero(worst),
        rows=rows,
        monotone=checks,
        monotone_ok=all(c.increasing for c in checks),
    )
