"""Discretized L^2 operators on nets: P_delta, translations, T_mu,
Littlewood-Paley pieces, flattening curves, dyadic decompositions, and the
Cotlar-Stein probe.

All operators act on net-sampled functions with the weighted inner product
<f, g> = sum_j w_j f_j g_j.  Kernels are materialized densely (nets here
stay below a few thousand cells; a hard cap guards the quadratic cost) and
composites keep closure form so that norm estimation by power iteration
never multiplies matrices.

The convolution semantics: (P_delta * f)(x) averages f over
{y^{-1} x : y in B_delta(1)}, so the kernel condition is
||x z^{-1} - 1|| <= delta.  On SU(2) the HS metric is bi-invariant and
this is plain ||x - z||; on SL(2,R) it is not, and the product condition
is evaluated as written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .groups import SL2R, SU2, GroupElement
from .measures import AtomicMeasure
from .nets import Net, embed
from .rng import stream

__all__ = [
    "DENSE_CELL_CAP",
    "net_ball_mass",
    "LinearOperator",
    "op_P_delta",
    "op_translate",
    "op_measure",
    "littlewood_paley",
    "almost_orthogonality_table",
    "CotlarData",
    "CotlarReport",
    "cotlar_stein_probe",
    "FlattenRow",
    "flattening_curve",
    "measure_density",
    "DyadicDecomposition",
    "DyadicReport",
    "dyadic_decompose",
    "MixingReport",
    "mixing_probe",
]

DENSE_CELL_CAP = 4000


def _wnorm(weights: np.ndarray, f: np.ndarray) -> float:
    return math.sqrt(float(np.sum(weights * np.abs(f) ** 2)))


def net_ball_mass(net, delta: float) -> float:
    """|B_delta(1)| as the net's own quadrature: total weight of cells with
    ||x_i - 1|| <= delta.  Using the net mass rather than the continuum
    volume keeps every P_delta identity (telescoping, the n = 0 flattening
    norm) exact at the discrete level; when the ball sticks out of the
    region this is the windowed mass.
    """
    cache = getattr(net, "_ball_mass_cache", None)
    if cache is None:
        cache = {}
        net._ball_mass_cache = cache
    key = float(delta)
    if key not in cache:
        diffs = net.centers - np.eye(2)
        d = np.sqrt(np.abs(diffs * diffs.conj()).sum(axis=(1, 2)).real)
        mass = float(net.weights[d <= delta].sum())
        if mass <= 0:
            raise ValueError(f"no net cells inside the {delta}-ball")
        cache[key] = mass
    return cache[key]


class LinearOperator:
    """Operator on net functions; adjoints are taken in the weighted metric."""

    def __init__(self, net, mv: Callable, rmv: Callable,
                 dense: Optional[np.ndarray] = None, label: str = ""):
        self.net = net
        self._mv = mv
        self._rmv = rmv
        self._dense = dense
        self.label = label

    @property
    def size(self) -> int:
        return self.net.size

    def matvec(self, f: np.ndarray) -> np.ndarray:
        return self._mv(np.asarray(f, dtype=float))

    def rmatvec(self, f: np.ndarray) -> np.ndarray:
        return self._rmv(np.asarray(f, dtype=float))

    @staticmethod
    def from_dense(net, A: np.ndarray, label: str = "") -> "LinearOperator":
        w = net.weights

        def mv(f):
            return A @ f

        def rmv(f):
            return (A.T @ (w * f)) / w

        return LinearOperator(net, mv, rmv, dense=A, label=label)

    @staticmethod
    def identity(net) -> "LinearOperator":
        return LinearOperator(net, lambda f: f.copy(), lambda f: f.copy(),
                              label="id")

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        n = self.size
        if n > DENSE_CELL_CAP:
            raise ValueError(f"{n} cells exceed the dense cap {DENSE_CELL_CAP}")
        out = self.matvec(np.eye(n))
        ok = isinstance(out, np.ndarray) and out.shape == (n, n)
        if ok:
            # closures mixing in 1-d weight arrays broadcast per column, not
            # per row, so verify the fast path actually acted columnwise
            v = np.cos(np.arange(n, dtype=float))
            ok = np.allclose(self.matvec(v), out @ v, rtol=1e-9, atol=1e-12)
        if not ok:
            out = np.stack([self.matvec(e) for e in np.eye(n)], axis=1)
        self._dense = out
        return out

    def adjoint(self) -> "LinearOperator":
        return LinearOperator(self.net, self._rmv, self._mv,
                              label=f"{self.label}*")

    def compose(self, other: "LinearOperator") -> "LinearOperator":
        if other.net is not self.net:
            raise ValueError("operators live on different nets")

        def mv(f):
            return self._mv(other._mv(f))

        def rmv(f):
            return other._rmv(self._rmv(f))

        return LinearOperator(self.net, mv, rmv,
                              label=f"{self.label}{other.label}")

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        return self._combine(other, 1.0)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        return self._combine(other, -1.0)

    def _combine(self, other: "LinearOperator", sign: float) -> "LinearOperator":
        if other.net is not self.net:
            raise ValueError("operators live on different nets")
        dense = None
        if self._dense is not None and other._dense is not None:
            dense = self._dense + sign * other._dense

        def mv(f):
            return self._mv(f) + sign * other._mv(f)

        def rmv(f):
            return self._rmv(f) + sign * other._rmv(f)

        op = LinearOperator(self.net, mv, rmv, dense=dense,
                            label=f"{self.label}{'+' if sign > 0 else '-'}{other.label}")
        return op

    def norm2(self, tol: float = 1e-6, max_iter: int = 500, seed: int = 0) -> float:
        """Weighted operator norm by power iteration on A*A."""
        w = self.net.weights
        rng = stream(seed, f"opnorm.{self.label}")
        v = rng.standard_normal(self.size)
        nv = _wnorm(w, v)
        if nv == 0:
            return 0.0
        v /= nv
        est = 0.0
        for _ in range(max_iter):
            u = self.matvec(v)
            s = _wnorm(w, u)
            if s < 1e-300:
                return 0.0
            v_next = self.rmatvec(u)
            nn = _wnorm(w, v_next)
            if nn < 1e-300:
                return s
            v = v_next / nn
            if abs(s - est) <= tol * max(est, 1e-30):
                return s
            est = s
        return est


def _pairwise_hs(net) -> np.ndarray:
    """Matrix of ||x_i x_j^{-1} - 1||, cached on the net instance."""
    cached = getattr(net, "_hs_pair_cache", None)
    if cached is not None:
        return cached
    n = net.size
    if n > DENSE_CELL_CAP:
        raise ValueError(f"{n} cells exceed the dense cap {DENSE_CELL_CAP}")
    if net.kind == SU2:
        E = net.embedded
        G = E @ E.T
        D = np.sqrt(np.maximum(4.0 - 2.0 * G, 0.0))
    else:
        C = net.centers
        inv = np.empty_like(C)
        inv[:, 0, 0] = C[:, 1, 1]
        inv[:, 0, 1] = -C[:, 0, 1]
        inv[:, 1, 0] = -C[:, 1, 0]
        inv[:, 1, 1] = C[:, 0, 0]
        D = np.empty((n, n))
        chunk = max(1, 2_000_000 // max(n, 1))
        eye = np.eye(2)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            prod = np.einsum("iab,jbc->ijac", C[lo:hi], inv)
            prod -= eye
            D[lo:hi] = np.sqrt(np.einsum("ijac,ijac->ij", prod, prod))
    net._hs_pair_cache = D
    return D


def op_P_delta(net, delta: float) -> LinearOperator:
    """Averaging over the delta-ball: (P_delta f)(x) = mean of f on
    {y^{-1}x : y in B_delta(1)}, delta-ball mass from the net's quadrature."""
    if delta < 2.0 * net.spacing:
        raise ValueError(
            f"delta {delta} below the resolvable scale 2*{net.spacing}")
    vol = net_ball_mass(net, delta)
    D = _pairwise_hs(net)
    K = np.where(D <= delta, 1.0, 0.0) * (net.weights[None, :] / vol)
    op = LinearOperator.from_dense(net, K, label=f"P[{delta:g}]")
    op.ball_mass = vol
    return op


def op_translate(g: GroupElement, net) -> LinearOperator:
    """(g.f)(x) = f(g^{-1} x) by nearest-cell lookup; rows whose preimage
    leaves the region are zeroed and their weight reported as clipped."""
    if g.kind != net.kind:
        raise ValueError("group element and net kinds differ")
    ginv = g.inverse().matrix
    images = np.einsum("ab,nbc->nac", ginv, net.centers)
    idx, dist = net.nearest_with_distance(images)
    keep = dist <= net.spacing * 1.5 + 1e-12
    clipped = float(net.weights[~keep].sum() / net.weights.sum())
    w = net.weights
    idx_safe = np.where(keep, idx, 0)

    def mv(f):
        out = np.where(keep, f[idx_safe], 0.0)
        return out

    def rmv(f):
        out = np.zeros_like(f)
        np.add.at(out, idx_safe[keep], (w * f)[keep])
        return out / w

    op = LinearOperator(net, mv, rmv, label=f"g[{g.kind}]")
    op.clipped_fraction = clipped
    op.clipped_flag = clipped > 0.5
    return op


def op_measure(mu: AtomicMeasure, net) -> LinearOperator:
    """T_mu = sum_g mu({g}) (translation by g)."""
    if mu.kind != net.kind:
        raise ValueError("measure and net kinds differ")
    mats = mu.matrices()
    wts = mu.weights_array()
    parts = [op_translate(GroupElement(mu.kind, m), net) for m in mats]

    def mv(f):
        out = np.zeros_like(f)
        for c, p in zip(wts, parts):
            out += c * p._mv(f)
        return out

    def rmv(f):
        out = np.zeros_like(f)
        for c, p in zip(wts, parts):
            out += c * p._rmv(f)
        return out

    op = LinearOperator(net, mv, rmv, label="Tmu")
    op.clipped_fraction = max(p.clipped_fraction for p in parts)
    return op


def littlewood_paley(net, i: int) -> LinearOperator:
    """Delta_0 = P_{1/2}; Delta_i = P_{2^{-(i+1)}} - P_{2^{-i}} for i >= 1."""
    if i < 0:
        raise ValueError("negative scale index")
    if i == 0:
        op = op_P_delta(net, 0.5)
        op.label = "D0"
        return op
    fine = op_P_delta(net, 2.0 ** (-(i + 1)))
    coarse = op_P_delta(net, 2.0 ** (-i))
    op = fine - coarse
    op.label = f"D{i}"
    return op


def almost_orthogonality_table(
    mu: AtomicMeasure, net, i_max: int, tol: float = 1e-6, seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, float]:
    """N[i][j] = ||Delta_j* T_mu* T_mu Delta_i|| with the scaled table
    N[i][j] 2^{|i-j|} and its maximum C0_hat."""
    from .measures import support_radius

    if support_radius(mu) > 1.0 + 1e-9:
        raise ValueError("measure support leaves the unit ball")
    pieces = [littlewood_paley(net, i) for i in range(i_max + 1)]
    T = op_measure(mu, net)
    raw = np.zeros((i_max + 1, i_max + 1))
    for i in range(i_max + 1):
        for j in range(i_max + 1):
            comp = pieces[j].adjoint().compose(T.adjoint()).compose(T).compose(pieces[i])
            comp.label = f"D{j}*T*TD{i}"
            raw[i, j] = comp.norm2(tol=tol, seed=seed)
    scale = np.array([[2.0 ** abs(i - j) for j in range(i_max + 1)]
                      for i in range(i_max + 1)])
    scaled = raw * scale
    return raw, scaled, float(scaled.max())


@dataclass(frozen=True)
class CotlarData:
    """phi(n) dominating the pairwise norm roots, with Phi = sum over Z."""

    phi: tuple

    def phi_at(self, n: int) -> float:
        n = abs(n)
        return self.phi[n] if n < len(self.phi) else 0.0

    @property
    def Phi(self) -> float:
        return self.phi[0] + 2.0 * sum(self.phi[1:])

    def Phi_k(self, k: int) -> float:
        if k <= 0:
            return self.Phi
        return 2.0 * sum(self.phi[k:])


@dataclass
class CotlarReport:
    domination_ok: bool
    failing_pairs: list
    tail_ok: bool
    cs1_ok: bool
    worst_tail_ratio: float
    worst_cs1_ratio: float


def cotlar_stein_probe(
    ops: Sequence[LinearOperator],
    phi: CotlarData,
    k: int,
    trials: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
) -> CotlarReport:
    """Check sum_{|i-j|>=k} |<T_i xi, T_j xi>| <= Phi_k Phi ||xi||^2 on random
    unit xi, plus sum_i ||T_i xi||^2 <= Phi^2 ||xi||^2, after verifying that
    phi dominates both families of pairwise norm roots."""
    m = len(ops)
    failing = []
    for i in range(m):
        for j in range(m):
            bound = phi.phi_at(i - j)
            a = ops[j].adjoint().compose(ops[i])
            a.label = f"cs.{j}*{i}"
            b = ops[i].compose(ops[j].adjoint())
            b.label = f"cs.{i}{j}*"
            root = max(a.norm2(tol=tol, seed=seed), b.norm2(tol=tol, seed=seed)) ** 0.5
            # norm estimates carry relative error of order tol, so domination
            # is only meaningful up to that slack
            if root > bound * (1 + 10 * tol) + 1e-12:
                failing.append((i, j, root, bound))
    net = ops[0].net
    w = net.weights
    rng = stream(seed, "cotlar.xi")
    worst_tail = 0.0
    worst_cs1 = 0.0
    Phi = phi.Phi
    Phi_k = phi.Phi_k(k)
    for _ in range(trials):
        xi = rng.standard_normal(net.size)
        xi /= _wnorm(w, xi)
        images = [op.matvec(xi) for op in ops]
        lhs = 0.0
        for i in range(m):
            for j in range(m):
                if abs(i - j) >= k:
                    lhs += abs(float(np.sum(w * images[i] * images[j])))
        rhs = Phi_k * Phi
        if rhs > 0:
            worst_tail = max(worst_tail, lhs / rhs)
        elif lhs > 1e-12:
            worst_tail = math.inf
        # rhs == lhs == 0 holds vacuously (all pairs inside the k-band)
        cs1 = sum(_wnorm(w, im) ** 2 for im in images)
        worst_cs1 = max(worst_cs1, cs1 / Phi**2)
    return CotlarReport(
        domination_ok=not failing,
        failing_pairs=failing,
        tail_ok=worst_tail <= 1.0 + 1e-9,
        cs1_ok=worst_cs1 <= 1.0 + 1e-9,
        worst_tail_ratio=worst_tail,
        worst_cs1_ratio=worst_cs1,
    )


def measure_density(mu: AtomicMeasure, net, delta: float) -> np.ndarray:
    """(mu * Q_delta)(x_i) with Q_delta = 1_{B_delta(1)}/|B_delta(1)|: the
    mu-mass of {g : ||g^{-1} x_i - 1|| <= delta} over the ball volume."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    vol = net_ball_mass(net, delta)
    out = np.zeros(net.size)
    mats = mu.matrices()
    wts = mu.weights_array()
    if net.kind == SU2:
        # bi-invariance reduces the condition to ||x_i - g|| <= delta
        pts = embed(net.kind, mats)
        for p, wt in zip(pts, wts):
            idx = net.tree.query_ball_point(p, delta)
            out[idx] += wt
    else:
        inv = np.empty_like(mats)
        inv[:, 0, 0] = mats[:, 1, 1]
        inv[:, 0, 1] = -mats[:, 0, 1]
        inv[:, 1, 0] = -mats[:, 1, 0]
        inv[:, 1, 1] = mats[:, 0, 0]
        eye = np.eye(2)
        chunk = max(1, 4_000_000 // max(net.size, 1))
        for lo in range(0, len(mats), chunk):
            hi = min(lo + chunk, len(mats))
            prod = np.einsum("aij,njk->anik", inv[lo:hi], net.centers)
            prod -= eye
            d2 = np.einsum("anik,anik->an", prod, prod)
            mask = d2 <= delta * delta
            out += wts[lo:hi] @ mask
    return out / vol


@dataclass(frozen=True)
class FlattenRow:
    n: int
    delta: float
    l2_norm: float


def flattening_curve(
    mu: AtomicMeasure, net, delta: float, n_max: int,
    cap: int = 2_000_000,
) -> tuple[list[FlattenRow], float]:
    """Weighted l2 norms of mu^{*n} * P_delta for n = 0..n_max, plus the
    fitted per-step decay exponent (slope of log2 norm against n)."""
    from .measures import convolve

    rows = []
    cur = None
    for n in range(n_max + 1):
        if n == 0:
            dens = _identity_density(net, delta)
        else:
            cur = mu if cur is None else convolve(cur, mu, cap=cap)
            dens = measure_density(cur, net, delta)
        rows.append(FlattenRow(n=n, delta=delta,
                               l2_norm=_wnorm(net.weights, dens)))
    norms = [r.l2_norm for r in rows if r.l2_norm > 0]
    if len(norms) >= 2:
        slope = np.polyfit(np.arange(len(norms)), np.log2(norms), 1)[0]
    else:
        slope = float("nan")
    return rows, float(slope)


def _identity_density(net, delta: float) -> np.ndarray:
    vol = net_ball_mass(net, delta)
    diffs = net.centers - np.eye(2)
    d = np.sqrt(np.abs(diffs * diffs.conj()).sum(axis=(1, 2)))
    return np.where(d <= delta, 1.0 / vol, 0.0)


@dataclass
class DyadicDecomposition:
    delta: float
    levels: list  # (i, cell index array); level 0 collects mass <= 1

    @property
    def nonempty_count(self) -> int:
        return sum(1 for _, idx in self.levels if len(idx))


@dataclass
class DyadicReport:
    delta: float
    nonempty_levels: int
    level_log_constant: float
    level_cap: int
    overlap_multiplicity: int
    sandwich_upper: float
    sandwich_lower: float

    @property
    def sandwich_constant(self) -> float:
        return max(self.sandwich_upper, self.sandwich_lower)


def dyadic_decompose(
    mu: AtomicMeasure, net, delta: float,
) -> tuple[DyadicDecomposition, DyadicReport]:
    """Level sets 2^{i-1} < mu_{2delta} <= 2^i and the lemma's three checks:
    level count against log(1/delta), disjoint-cell overlap, and the
    pointwise sandwich mu_delta <= C sum 2^i 1_{A_i} <= C' mu_{3delta}."""
    if delta < 2.0 * net.spacing:
        raise ValueError(f"delta {delta} below the resolvable scale")
    dens2 = measure_density(mu, net, 2.0 * delta)
    positive = dens2 > 0
    levels = []
    top = 0 if not positive.any() else max(
        1, int(math.ceil(math.log2(dens2.max()))) if dens2.max() > 1 else 0)
    idx0 = np.nonzero(positive & (dens2 <= 1.0))[0]
    levels.append((0, idx0))
    for i in range(1, top + 1):
        sel = (dens2 > 2.0 ** (i - 1)) & (dens2 <= 2.0**i)
        levels.append((i, np.nonzero(sel)[0]))
    decomp = DyadicDecomposition(delta=delta, levels=levels)

    dens1 = measure_density(mu, net, delta)
    dens3 = measure_density(mu, net, 3.0 * delta)
    envelope = np.zeros(net.size)
    envelope_pos = np.zeros(net.size)
    for i, idx in levels:
        envelope[idx] += 2.0**i
        if i > 0:
            envelope_pos[idx] += 2.0**i
    up = 0.0
    mask = dens1 > 0
    if mask.any():
        up = float((dens1[mask] / envelope[mask]).max())
    low = 0.0
    mask = envelope_pos > 0
    if mask.any():
        low = float((envelope_pos[mask] / dens3[mask]).max())
    vol = net_ball_mass(net, delta)
    report = DyadicReport(
        delta=delta,
        nonempty_levels=decomp.nonempty_count,
        level_log_constant=decomp.nonempty_count / max(math.log2(1.0 / delta), 1e-9),
        level_cap=int(math.ceil(math.log2(1.0 / vol))) + 2,
        overlap_multiplicity=1,
        sandwich_upper=up,
        sandwich_lower=low,
    )
    return decomp, report


@dataclass(frozen=True)
class MixingReport:
    lhs: float
    p_delta_norm: float
    delta: float


def mixing_probe(net, f: np.ndarray, F: np.ndarray, delta: float) -> MixingReport:
    """||f * F||_2^{48} against ||P_delta F||_2 at scale delta (d = 3, so the
    mixing exponent 16d = 48); the caller sweeps delta and fits envelopes."""
    f = np.asarray(f, dtype=float)
    F = np.asarray(F, dtype=float)
    conv = _function_convolve(net, f, F)
    lhs = _wnorm(net.weights, conv) ** 48
    p = op_P_delta(net, delta)
    rhs = _wnorm(net.weights, p.matvec(F))
    return MixingReport(lhs=lhs, p_delta_norm=rhs, delta=delta)


def _function_convolve(net, f: np.ndarray, F: np.ndarray) -> np.ndarray:
    """(f*F)(x_i) = sum_j w_j f_j F(y_j^{-1} x_i) with nearest-cell reads."""
    n = net.size
    if n > DENSE_CELL_CAP:
        raise ValueError(f"{n} cells exceed the dense cap {DENSE_CELL_CAP}")
    out = np.zeros(n)
    inv = np.conjugate(np.transpose(net.centers, (0, 2, 1))) if net.kind == SU2 \
        else np.linalg.inv(net.centers)
    w = net.weights
    chunk = max(1, 2_000_000 // n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        prods = np.einsum("jab,nbc->jnac", inv[lo:hi], net.centers)
        idx = net.nearest(prods.reshape(-1, 2, 2)).reshape(hi - lo, n)
        out += (w[lo:hi] * f[lo:hi]) @ F[idx]
    return out
