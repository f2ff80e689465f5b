"""Projective line P^1(R): Moebius action, ping-pong certificates, quasi-regular action.

Points are lines through the origin, parametrized by the angle in [0, pi)
or by the slope-chart coordinate x = cos/sin in R + {inf}.  A determinant
one matrix acts on the circle as an orientation preserving homeomorphism,
so arcs map to arcs and a ping-pong table is a finite combinatorial
object that can be checked exactly when the generators are rational.

Freeness certificates follow the table conditions

  (a) g(U_g) contained in K_g
  (b) every point lies in at least two of the U_g
  (c) K_{g1} contained in U_{g2} unless g1 g2 = 1
  (d) K_{g1} and K_{g2} disjoint unless g1 = g2

over the symmetric closure.  Each comparison must hold either with an
angular gap of at least MARGIN, or by exact endpoint coincidence with
compatible open/closed flags (at most one side closed), decided in
Fraction arithmetic.  Tangent tables are the rule rather than the
exception here: parabolic generators admit no uniformly strict table, and
the classical Sanov configuration touches at the four cusps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .groups import SL2R, GeneratorSet, GroupElement
from .rng import stream

MARGIN = 1e-9

Scalar = Union[Fraction, float]

_NEG_INF = object()  # linear sentinels for the slope line
_POS_INF = object()


def _angle_of_slope(x) -> float:
    if x is None:
        return 0.0
    return math.atan2(1.0, float(x)) % math.pi


def _angle_gap(t1: float, t2: float) -> float:
    d = abs(t1 - t2) % math.pi
    return min(d, math.pi - d)


@dataclass(frozen=True)
class ProjectivePoint:
    """Line through the origin, angle in [0, pi)."""

    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "angle", float(self.angle) % math.pi)

    @staticmethod
    def from_vector(v: Sequence[float]) -> "ProjectivePoint":
        x, y = float(v[0]), float(v[1])
        if x == 0.0 and y == 0.0:
            raise ValueError("zero vector has no direction")
        return ProjectivePoint(math.atan2(y, x))

    @staticmethod
    def from_slope(x: Optional[float]) -> "ProjectivePoint":
        return ProjectivePoint(_angle_of_slope(x))

    def vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])

    def slope(self) -> float:
        s = math.sin(self.angle)
        if s == 0.0:
            return math.inf
        return math.cos(self.angle) / s


def moebius_apply(g: GroupElement, p: ProjectivePoint) -> ProjectivePoint:
    """Image of the line under g, computed on a representative vector."""
    if g.kind != SL2R:
        raise ValueError("the projective action is defined for SL(2,R)")
    return ProjectivePoint.from_vector(g.matrix @ p.vector())


# --- exact circle arithmetic in the slope chart ------------------------------
#
# The circle is cut at the point inf (angle 0).  A subset is stored as
# "does it contain inf" plus a disjoint list of linear slope intervals.
# Increasing angle corresponds to decreasing slope, with inf between the
# two ends of the line.


def _slope_key(x) -> float:
    return float(x)


def _lt(a, b) -> bool:
    if a is _NEG_INF:
        return b is not _NEG_INF
    if a is _POS_INF:
        return False
    if b is _NEG_INF:
        return False
    if b is _POS_INF:
        return True
    return a < b


def _eq(a, b) -> bool:
    if (a is _NEG_INF) or (b is _NEG_INF):
        return a is b
    if (a is _POS_INF) or (b is _POS_INF):
        return a is b
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return float(a) == float(b)


@dataclass(frozen=True)
class Iv:
    """Linear slope interval with open/closed endpoint flags."""

    lo: object
    lo_closed: bool
    hi: object
    hi_closed: bool

    def is_empty(self) -> bool:
        if _lt(self.hi, self.lo):
            return True
        if _eq(self.lo, self.hi):
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, x) -> bool:
        if _lt(x, self.lo) or _lt(self.hi, x):
            return False
        if _eq(x, self.lo) and not self.lo_closed:
            return False
        if _eq(x, self.hi) and not self.hi_closed:
            return False
        return True


def _iv_intersect(a: Iv, b: Iv) -> Iv:
    if _eq(a.lo, b.lo):
        lo, lo_c = a.lo, a.lo_closed and b.lo_closed
    elif _lt(a.lo, b.lo):
        lo, lo_c = b.lo, b.lo_closed
    else:
        lo, lo_c = a.lo, a.lo_closed
    if _eq(a.hi, b.hi):
        hi, hi_c = a.hi, a.hi_closed and b.hi_closed
    elif _lt(a.hi, b.hi):
        hi, hi_c = a.hi, a.hi_closed
    else:
        hi, hi_c = b.hi, b.hi_closed
    return Iv(lo, lo_c, hi, hi_c)


@dataclass(frozen=True)
class CircleSet:
    """Subset of P^1(R): inf membership plus disjoint slope intervals."""

    inf_in: bool
    parts: tuple[Iv, ...]

    @staticmethod
    def empty() -> "CircleSet":
        return CircleSet(False, ())

    @staticmethod
    def full() -> "CircleSet":
        return CircleSet(True, (Iv(_NEG_INF, False, _POS_INF, False),))

    def is_empty(self) -> bool:
        return not self.inf_in and all(p.is_empty() for p in self.parts)

    def contains_slope(self, x) -> bool:
        return any(p.contains(x) for p in self.parts)

    def complement(self) -> "CircleSet":
        live = sorted(
            (p for p in self.parts if not p.is_empty()),
            key=lambda p: (-math.inf if p.lo is _NEG_INF else float(p.lo)),
        )
        out: list[Iv] = []
        cur, cur_flag = _NEG_INF, False
        for p in live:
            lo_c = (not cur_flag) if cur is not _NEG_INF else False
            gap = Iv(cur, lo_c, p.lo, not p.lo_closed)
            if not gap.is_empty():
                out.append(gap)
            cur, cur_flag = p.hi, p.hi_closed
        if cur is _NEG_INF:
            out.append(Iv(_NEG_INF, False, _POS_INF, False))
        elif cur is not _POS_INF:
            out.append(Iv(cur, not cur_flag, _POS_INF, False))
        return CircleSet(not self.inf_in, tuple(out))

    def intersect(self, other: "CircleSet") -> "CircleSet":
        parts = []
        for p in self.parts:
            for q in other.parts:
                r = _iv_intersect(p, q)
                if not r.is_empty():
                    parts.append(r)
        return CircleSet(self.inf_in and other.inf_in, tuple(parts))

    def subset_of(self, other: "CircleSet") -> bool:
        return self.intersect(other.complement()).is_empty()

    def disjoint_from(self, other: "CircleSet") -> bool:
        return self.intersect(other).is_empty()

    def boundary_slopes(self) -> list:
        out = []
        for p in self.parts:
            for e in (p.lo, p.hi):
                if e is not _NEG_INF and e is not _POS_INF:
                    out.append(e)
        return out


@dataclass(frozen=True)
class Arc:
    """Circular arc from `start` to `end` traversed in increasing angle.

    Endpoints are slopes (Fraction or float) or None for the point inf.
    Increasing angle means decreasing slope; the arc wraps through inf
    when the slope order demands it.
    """

    start: Optional[Scalar]
    end: Optional[Scalar]
    closed_start: bool = True
    closed_end: bool = True

    def to_set(self) -> CircleSet:
        s, e = self.start, self.end
        if s is None and e is None:
            raise ValueError("degenerate arc")
        if s is None:  # from inf, down through positive slopes
            return CircleSet(self.closed_start, (Iv(e, self.closed_end, _POS_INF, False),))
        if e is None:  # negative slopes down to inf
            return CircleSet(self.closed_end, (Iv(_NEG_INF, False, s, self.closed_start),))
        if _lt(e, s):  # plain arc, no wrap: slopes in [e, s]
            return CircleSet(False, (Iv(e, self.closed_end, s, self.closed_start),))
        # wraps through inf: [-inf, s] + inf + [e, +inf]
        return CircleSet(
            True,
            (
                Iv(_NEG_INF, False, s, self.closed_start),
                Iv(e, self.closed_end, _POS_INF, False),
            ),
        )

    def angles(self) -> tuple[float, float]:
        return _angle_of_slope(self.start), _angle_of_slope(self.end)


def _moebius_slope(mat, x):
    """Exact (or float) slope-chart action of a 2x2 matrix."""
    a, b = mat[0]
    c, d = mat[1]
    if x is None:
        if _is_zero(c):
            return None
        return a / c
    num = a * x + b
    den = c * x + d
    if _is_zero(den):
        return None
    return num / den


def _is_zero(v) -> bool:
    if isinstance(v, Fraction):
        return v == 0
    return v == 0.0


def _exact_matrix(g: GroupElement):
    if g.exact is not None:
        return g.exact
    return tuple(tuple(float(v) for v in row) for row in g.matrix)


def arc_image(mat, arc: Arc) -> Arc:
    """Image of an arc under an orientation preserving Moebius map."""
    return Arc(
        _moebius_slope(mat, arc.start),
        _moebius_slope(mat, arc.end),
        arc.closed_start,
        arc.closed_end,
    )


# --- certificates ------------------------------------------------------------


@dataclass(frozen=True)
class PingPongCertificate:
    """Verified table (K_g, U_g) over the symmetric closure of a generator set."""

    letters: tuple[tuple[int, int], ...]
    U: tuple[tuple[Arc, ...], ...]
    K: tuple[tuple[Arc, ...], ...]
    margin: float
    tangencies: int

    def to_json(self) -> str:
        def arcs(aa):
            out = []
            for a in aa:
                sa, ea = a.angles()
                rec = {
                    "start_angle": sa,
                    "end_angle": ea,
                    "closed_start": a.closed_start,
                    "closed_end": a.closed_end,
                    "start_slope": _slope_str(a.start),
                    "end_slope": _slope_str(a.end),
                }
                out.append(rec)
            return out

        payload = {
            "margin": self.margin,
            "tangencies": self.tangencies,
            "elements": [
                {"letter": list(l), "U": arcs(u), "K": arcs(k)}
                for l, u, k in zip(self.letters, self.U, self.K)
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "PingPongCertificate":
        data = json.loads(text)

        def arcs(records):
            return tuple(
                Arc(
                    _slope_parse(r["start_slope"]),
                    _slope_parse(r["end_slope"]),
                    r["closed_start"],
                    r["closed_end"],
                )
                for r in records
            )

        return PingPongCertificate(
            letters=tuple(tuple(e["letter"]) for e in data["elements"]),
            U=tuple(arcs(e["U"]) for e in data["elements"]),
            K=tuple(arcs(e["K"]) for e in data["elements"]),
            margin=data["margin"],
            tangencies=data["tangencies"],
        )


def _slope_str(x) -> str:
    if x is None:
        return "inf"
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def _slope_parse(s: str):
    if s == "inf":
        return None
    if "/" in s or s.lstrip("+-").isdigit():
        return Fraction(s)
    return float(s)


@dataclass(frozen=True)
class NoCertificate:
    """Search exhausted its budget; inconclusive by contract."""

    reason: str
    tables_tried: int


def _sym_closure(gens: GeneratorSet) -> list[tuple[tuple[int, int], GroupElement]]:
    out = []
    for i, g in enumerate(gens.labeled().elements):
        out.append(((i, 1), g))
    for i, g in enumerate(gens.labeled().elements):
        out.append(((i, -1), g.inverse()))
    return out


def _fixed_slopes(g: GroupElement) -> list:
    """Fixed points on P^1; exact Fractions for rational parabolic elements."""
    mat = _exact_matrix(g)
    a, b = mat[0]
    c, d = mat[1]
    exact = isinstance(a, Fraction)
    if _is_zero(c):
        out = [None]
        if not _eq(d, a):
            out.append(b / (d - a))
        return out
    disc = (d - a) * (d - a) + 4 * b * c
    if exact:
        if disc < 0:
            return []
        if disc == 0:
            return [(a - d) / (2 * c)]
        root = math.sqrt(float(disc))
        return [float((a - d)) / (2 * float(c)) + root / (2 * float(c)),
                float((a - d)) / (2 * float(c)) - root / (2 * float(c))]
    if disc < 0:
        return []
    root = math.sqrt(disc)
    return [(a - d + root) / (2 * c), (a - d - root) / (2 * c)]


def _trace(g: GroupElement) -> float:
    return float(np.trace(g.matrix).real)


def _repelling_direction(g: GroupElement, p) -> int:
    """+1 if g repels on the increasing-angle side of fixed point p, else -1."""
    theta = _angle_of_slope(p)
    h = 1e-4
    for sgn in (1, -1):
        probe = ProjectivePoint(theta + sgn * h)
        image = moebius_apply(g, probe)
        d0 = _angle_gap(probe.angle, theta)
        d1 = _angle_gap(image.angle, theta)
        if d1 > d0 * (1 + 1e-6):
            return sgn
    return 1


def _circular_sort(slopes: list) -> list:
    """Sort points by increasing angle; inf (angle 0) first when present."""
    inf_pts = [s for s in slopes if s is None]
    finite = sorted((s for s in slopes if s is not None), key=lambda x: -_slope_key(x))
    return inf_pts[:1] + finite


def _audit_gaps(table, margin: float) -> Optional[tuple[float, int]]:
    """Minimal nonzero angular gap and exact-tangency count across all endpoints.

    Returns None when two distinct endpoints sit closer than `margin`
    without being exactly equal, which makes the table numerically
    ambiguous.
    """
    endpoints = []
    for u_set, k_set in table:
        for s in (u_set, k_set):
            endpoints.extend(s.boundary_slopes())
    min_gap = math.inf
    tangencies = 0
    for i in range(len(endpoints)):
        for j in range(i + 1, len(endpoints)):
            a, b = endpoints[i], endpoints[j]
            exact = isinstance(a, Fraction) and isinstance(b, Fraction)
            if _eq(a, b):
                if not exact:
                    return None  # float coincidence cannot be certified
                tangencies += 1
                continue
            gap = _angle_gap(_angle_of_slope(a), _angle_of_slope(b))
            if gap < margin and not exact:
                return None
            if gap > 0:
                min_gap = min(min_gap, gap)
    return (min_gap if min_gap < math.inf else math.pi / 2, tangencies // 2)


@dataclass(frozen=True)
class _Row:
    """One candidate table row: element, U as arcs and set, K likewise."""

    letter: tuple[int, int]
    g: GroupElement
    u_arcs: tuple[Arc, ...]
    u_set: CircleSet
    k_arcs: tuple[Arc, ...]
    k_set: CircleSet


def _check_table(rows: Sequence[_Row], margin: float):
    """Conditions (a)-(d) on a candidate table; returns (margin, tangencies) or None."""
    audit = _audit_gaps([(r.u_set, r.k_set) for r in rows], margin)
    if audit is None:
        return None
    n = len(rows)
    # (a) image of U_g inside K_g, arc by arc
    for r in rows:
        mat = _exact_matrix(r.g)
        for arc in r.u_arcs:
            if not arc_image(mat, arc).to_set().subset_of(r.k_set):
                return None
    # (c) K_{g1} subset U_{g2} unless g1 g2 = 1
    for i in range(n):
        for j in range(n):
            li, lj = rows[i].letter, rows[j].letter
            if li[0] == lj[0] and li[1] == -lj[1]:
                continue
            if not rows[i].k_set.subset_of(rows[j].u_set):
                return None
    # (d) K's pairwise disjoint
    for i in range(n):
        for j in range(i + 1, n):
            if not rows[i].k_set.disjoint_from(rows[j].k_set):
                return None
    # (b) every point in at least two U's
    if not _coverage_at_least([r.u_set for r in rows], 2):
        return None
    return audit


def _coverage_at_least(sets: Sequence[CircleSet], need: int) -> bool:
    events: list = [None]
    for s in sets:
        events.extend(s.boundary_slopes())
    ordered = _circular_sort(events)
    # distinct representatives in circular (angle) order
    distinct: list = []
    for p in ordered:
        if not distinct or not _points_equal(distinct[-1], p):
            distinct.append(p)
    witnesses: list = []
    for p in distinct:
        witnesses.append(p)
    m = len(distinct)
    for t in range(m):
        p, q = distinct[t], distinct[(t + 1) % m]
        witnesses.append(_between(p, q))
    for w in witnesses:
        count = 0
        for s in sets:
            if w is None:
                count += s.inf_in
            else:
                count += s.contains_slope(w)
        if count < need:
            return False
    return True


def _points_equal(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return _eq(a, b)


def _between(p, q):
    """A slope strictly between p and q in increasing-angle order."""
    if p is None and q is None:
        return Fraction(0)
    if p is None:  # just after inf: slopes above q
        return q + 1
    if q is None:  # just before inf: slopes below p
        return p - 1
    if _lt(q, p):  # no wrap, strictly between in descending slope
        return (p + q) / 2
    return None  # consecutive distinct points wrap through inf; inf itself is the witness


def certify_free(gens: GeneratorSet, budget: int = 1000) -> Union[PingPongCertificate, NoCertificate]:
    """Search for a ping-pong table certifying that `gens` generate freely.

    Seeds K_g from attracting neighborhoods of the dominant eigenline when
    the element is hyperbolic, and from parabolic fixed points of the
    generators and their pair products otherwise, then grows U_g outward
    and verifies (a)-(d).  Failure is inconclusive by contract.
    """
    if gens.kind != SL2R:
        raise ValueError("freeness certification runs on the SL(2,R) projective action")
    if gens.k < 2:
        raise ValueError("need at least two generators")
    sym = _sym_closure(gens)
    tried = 0

    # Phase A: all-hyperbolic Schottky search with strictly separated arcs.
    traces = [abs(_trace(g)) for _, g in sym]
    if all(t > 2 + 1e-12 for t in traces):
        result = _schottky_search(sym, budget)
        if isinstance(result, PingPongCertificate):
            return result
        tried += result.tables_tried

    # Phase B: tangent tables anchored at rational parabolic fixed points.
    if all(g.exact is not None for _, g in sym):
        result = _tangent_search(sym, budget - tried)
        if isinstance(result, PingPongCertificate):
            return result
        tried += result.tables_tried
    return NoCertificate("budget exhausted without a verified table", tried)


def _finish(rows: Sequence[_Row], margin_info) -> PingPongCertificate:
    return PingPongCertificate(
        letters=tuple(r.letter for r in rows),
        U=tuple(r.u_arcs for r in rows),
        K=tuple(r.k_arcs for r in rows),
        margin=margin_info[0],
        tangencies=margin_info[1],
    )


def _build_table(sym, r_arcs) -> list[_Row]:
    """From repelling arcs R_g, set U_g = complement, K_g = image of U_g."""
    rows = []
    for (letter, g), r_arc in zip(sym, r_arcs):
        mat = _exact_matrix(g)
        # complement of one arc is one arc with swapped endpoints, open/closed flipped
        u_arc = Arc(r_arc.end, r_arc.start, not r_arc.closed_end, not r_arc.closed_start)
        k_arc = arc_image(mat, u_arc)
        rows.append(
            _Row(letter, g, (u_arc,), u_arc.to_set(), (k_arc,), k_arc.to_set())
        )
    return rows


def _schottky_search(sym, budget: int):
    tried = 0
    fixed = []
    for _, g in sym:
        pts = _fixed_slopes(g)
        if len(pts) < 2:
            return NoCertificate("non-hyperbolic element in Schottky phase", tried)
        # dominant eigenline: the attracting fixed point; repelling is the other
        p_att, p_rep = _order_fixed(g, pts)
        fixed.append((p_att, p_rep))
    angles = [_angle_of_slope(p) for pair in fixed for p in pair]
    sep = min(
        _angle_gap(angles[i], angles[j])
        for i in range(len(angles))
        for j in range(i + 1, len(angles))
        if _angle_gap(angles[i], angles[j]) > 1e-14
    )
    t = sep / 3.0
    while tried < budget and t > 1e-12:
        r_arcs = []
        for (_, g), (p_att, p_rep) in zip(sym, fixed):
            theta = _angle_of_slope(p_rep)
            r_arcs.append(
                Arc(
                    _cot(theta - t),
                    _cot(theta + t),
                    True,
                    True,
                )
            )
        rows = _build_table(sym, r_arcs)
        tried += 1
        res = _check_table(rows, MARGIN)
        if res is not None:
            return _finish(rows, res)
        t /= 2.0
    return NoCertificate("Schottky phase exhausted", tried)


def _cot(theta: float) -> float:
    s = math.sin(theta)
    c = math.cos(theta)
    if abs(s) < 1e-300:
        return math.copysign(1e300, c)
    return c / s


def _order_fixed(g: GroupElement, pts) -> tuple:
    """(attracting, repelling) fixed points of a hyperbolic element."""
    vals = []
    for p in pts:
        theta = _angle_of_slope(p)
        probe = ProjectivePoint(theta + 1e-5)
        img = moebius_apply(g, probe)
        vals.append(_angle_gap(img.angle, theta) / 1e-5)
    if vals[0] <= vals[1]:
        return pts[0], pts[1]
    return pts[1], pts[0]


def _tangent_search(sym, budget: int):
    """Enumerate tables with R_g anchored at rational parabolic fixed points."""
    tried = 0
    if budget <= 0:
        return NoCertificate("no budget left", 0)
    candidates: list = []

    def add(p):
        if isinstance(p, Fraction) or p is None:
            if not any(_points_equal(p, q) for q in candidates):
                candidates.append(p)

    anchors = []
    for _, g in sym:
        tr = _trace(g)
        if abs(abs(tr) - 2.0) > 1e-12:
            return NoCertificate("tangent phase needs parabolic generators", tried)
        pts = _fixed_slopes(g)
        if not pts:
            return NoCertificate("no fixed point found", tried)
        anchors.append(pts[0])
        add(pts[0])
    n = len(sym)
    for i in range(n):
        for j in range(n):
            li, lj = sym[i][0], sym[j][0]
            if li[0] == lj[0] and li[1] == -lj[1]:
                continue
            prod = sym[i][1].mul(sym[j][1])
            if abs(abs(_trace(prod)) - 2.0) < 1e-12:
                for p in _fixed_slopes(prod):
                    add(p)
    ordered = _circular_sort(candidates)
    m = len(ordered)
    if m < 2:
        return NoCertificate("not enough candidate boundary points", tried)

    # R_g runs from the anchor along the repelling side, ending d candidates away
    reps = [_repelling_direction(g, p) for (_, g), p in zip(sym, anchors)]
    idx_of = []
    for p in anchors:
        idx_of.append(next(t for t in range(m) if _points_equal(ordered[t], p)))

    depth_options = range(1, min(m, 4))
    choices = [list(depth_options)] * n
    for combo in _product_lazy(choices):
        if tried >= budget:
            break
        tried += 1
        r_arcs = []
        for t in range(n):
            d = combo[t]
            i0 = idx_of[t]
            if reps[t] > 0:  # repelling side = increasing angle: arc from anchor forward
                j0 = (i0 + d) % m
                r_arcs.append(Arc(ordered[i0], ordered[j0], True, True))
            else:
                j0 = (i0 - d) % m
                r_arcs.append(Arc(ordered[j0], ordered[i0], True, True))
        rows = _build_table(sym, r_arcs)
        res = _check_table(rows, MARGIN)
        if res is not None:
            return _finish(rows, res)
    return NoCertificate("tangent phase exhausted", tried)


def _product_lazy(choices):
    if not choices:
        yield ()
        return
    for head in choices[0]:
        for rest in _product_lazy(choices[1:]):
            yield (head,) + rest


def verify_certificate(
    cert: PingPongCertificate,
    gens: GeneratorSet,
    samples_per_interval: int = 10_000,
    seed: int = 7,
) -> bool:
    """Independent re-verification: exact set checks plus dense sampling.

    Sampling draws `samples_per_interval` interior angles per U-arc,
    pushes them through the float matrices and tests membership in K_g
    with angular tolerance MARGIN.
    """
    sym = _sym_closure(gens)
    by_letter = {l: g for l, g in sym}
    rows = []
    for letter, u_arcs, k_arcs in zip(cert.letters, cert.U, cert.K):
        u_set = CircleSet.empty()
        for a in u_arcs:
            u_set = _union(u_set, a.to_set())
        k_set = CircleSet.empty()
        for a in k_arcs:
            k_set = _union(k_set, a.to_set())
        rows.append(_Row(tuple(letter), by_letter[tuple(letter)], tuple(u_arcs), u_set, tuple(k_arcs), k_set))
    if _check_table(rows, MARGIN) is None:
        return False
    rng = stream(seed, "pingpong-verify")
    for letter, u_arcs, k_arcs in zip(cert.letters, cert.U, cert.K):
        g = by_letter[tuple(letter)]
        k_angles = [a.angles() for a in k_arcs]
        for arc in u_arcs:
            sa, ea = arc.angles()
            span = (ea - sa) % math.pi
            if span == 0.0:
                span = math.pi
            ts = rng.uniform(1e-7, 1 - 1e-7, size=samples_per_interval)
            for t in ts:
                theta = (sa + t * span) % math.pi
                img = moebius_apply(g, ProjectivePoint(theta)).angle
                if not any(
                    _angle_in_arc(img, a0, a1, MARGIN) for a0, a1 in k_angles
                ):
                    return False
    return True


def _union(a: CircleSet, b: CircleSet) -> CircleSet:
    return a.complement().intersect(b.complement()).complement()


def _angle_in_arc(theta: float, start: float, end: float, tol: float) -> bool:
    span = (end - start) % math.pi
    off = (theta - start) % math.pi
    return off <= span + tol or off >= math.pi - tol


def quasi_regular_apply(g: GroupElement, f: np.ndarray, net) -> tuple[np.ndarray, float]:
    """Unitary quasi-regular action on L^2 of the chart line.

    (pi(g) f)(x) = |c x + d|^{-1} f(g^{-1} x) with g^{-1} = [[a, b], [c, d]]
    acting by x -> (a x + b)/(c x + d).  The Radon-Nikodym half-density
    weight makes the operator unitary on L^2(R); on a finite interval net
    the image is zero where g^{-1} x leaves the window and the clipped
    weight fraction is returned alongside the values.
    """
    if g.kind != SL2R:
        raise ValueError("quasi-regular action is defined for SL(2,R)")
    f = np.asarray(f, dtype=float)
    if f.shape != (net.size,):
        raise ValueError(f"f has shape {f.shape}, net has {net.size} cells")
    inv = g.inverse().matrix
    a, b = inv[0]
    c, d = inv[1]
    x = net.centers
    den = c * x + d
    out = np.zeros_like(f)
    ok = np.abs(den) > 1e-14
    y = np.empty_like(x)
    y[ok] = (a * x[ok] + b) / den[ok]
    y[~ok] = np.inf
    # the interval net clips nearest-cell lookups, so window membership
    # must be tested on y itself
    inside = ok & (y >= 0.0) & (y <= 1.0)
    idx = net.nearest(np.where(inside, y, 0.0))
    out[inside] = np.abs(den[inside]) ** -1.0 * f[idx[inside]]
    clipped = float(np.sum(net.weights[~inside]) / np.sum(net.weights))
    return out, clipped
