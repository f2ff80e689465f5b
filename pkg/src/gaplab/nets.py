"""Finite nets over group regions, with cell Haar weights and fast lookup.

SU(2) nets live on hyperspherical coordinates of the unit quaternion
sphere: q = (cos psi, sin psi sin th cos ph, sin psi sin th sin ph,
sin psi cos th) with Haar density sin^2(psi) sin(th) and total mass
2 pi^2.  Cell weights are exact band integrals, so they telescope to the
region volume with no quadrature error.  SL(2,R) nets are uniform boxes
in the exponential chart over the Frobenius-orthonormal basis
(E, H/sqrt(2), F); there the Haar density sinh^2(s)/s^2 with
s^2 = y^2/2 + xz is evaluated at cell centers.

Distances are always the Hilbert-Schmidt metric.  Both groups embed
isometrically into R^4 (flattened matrices for SL(2,R), sqrt(2) times
the quaternion for SU(2)), which makes every proximity query a Euclidean
KD-tree query.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .groups import SL2R, SU2, su2_from_quaternion

__all__ = [
    "Net",
    "IntervalNet",
    "build_net",
    "ball_volume",
    "embed",
    "sl2r_exp",
]

SU2_TOTAL_MASS = 2.0 * math.pi**2


def embed(kind: str, mats: np.ndarray) -> np.ndarray:
    """HS-isometric embedding into R^4 of a (..., 2, 2) matrix stack."""
    mats = np.asarray(mats)
    if kind == SL2R:
        return mats.reshape(mats.shape[:-2] + (4,)).astype(float)
    if kind == SU2:
        a = mats[..., 0, 0]
        b = mats[..., 0, 1]
        q = np.stack([a.real, b.imag, b.real, a.imag], axis=-1)
        return math.sqrt(2.0) * q
    raise ValueError(f"unknown group kind {kind!r}")


def sl2r_exp(coords: np.ndarray) -> np.ndarray:
    """exp of x E + y H/sqrt(2) + z F for coords (..., 3), closed form.

    X has X^2 = s^2 I with s^2 = y^2/2 + xz, so exp X = c(s) I + m(s) X
    with c = cosh s, m = sinh(s)/s (trigonometric for s^2 < 0).
    """
    coords = np.asarray(coords, dtype=float)
    x, y, z = coords[..., 0], coords[..., 1], coords[..., 2]
    s2 = y * y / 2.0 + x * z
    r = np.sqrt(np.abs(s2))
    r = np.where(r < 1e-30, 1e-30, r)
    c = np.where(s2 >= 0, np.cosh(r), np.cos(r))
    m = np.where(s2 >= 0, np.sinh(r) / r, np.sin(r) / r)
    # s^2 -> 0 limits: c -> 1, m -> 1
    tiny = np.abs(s2) < 1e-24
    c = np.where(tiny, 1.0, c)
    m = np.where(tiny, 1.0, m)
    d = y / math.sqrt(2.0)
    out = np.empty(coords.shape[:-1] + (2, 2))
    out[..., 0, 0] = c + m * d
    out[..., 0, 1] = m * x
    out[..., 1, 0] = m * z
    out[..., 1, 1] = c - m * d
    return out


def _haar_density_sl2r(coords: np.ndarray) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    x, y, z = coords[..., 0], coords[..., 1], coords[..., 2]
    s2 = y * y / 2.0 + x * z
    r = np.sqrt(np.abs(s2))
    small = r < 1e-8
    r_safe = np.where(small, 1.0, r)
    dens = np.where(
        s2 >= 0,
        (np.sinh(r_safe) / r_safe) ** 2,
        (np.sin(r_safe) / r_safe) ** 2,
    )
    return np.where(small, 1.0 + s2 / 3.0, dens)


@dataclass
class Net:
    """A finite net over a group region.

    centers holds one matrix per cell, weights the cell Haar masses, and
    spacing the covering radius: no point of the region is farther than
    spacing from its nearest center in the HS metric.
    """

    kind: str
    centers: np.ndarray
    weights: np.ndarray
    spacing: float
    region: dict
    embedded: np.ndarray = field(init=False, repr=False)
    _tree: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        self.embedded = embed(self.kind, self.centers)
        self._tree = cKDTree(self.embedded)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def tree(self) -> cKDTree:
        return self._tree

    def nearest(self, mats: np.ndarray) -> np.ndarray:
        """Indices of the nearest cells to a (..., 2, 2) matrix stack."""
        pts = embed(self.kind, np.asarray(mats))
        _, idx = self._tree.query(pts)
        return idx

    def nearest_with_distance(self, mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = embed(self.kind, np.asarray(mats))
        dist, idx = self._tree.query(pts)
        return idx, dist

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def save(self, path: str) -> None:
        """Binary cache plus a small JSON manifest next to it."""
        np.savez_compressed(
            path if path.endswith(".npz") else path + ".npz",
            kind=self.kind,
            centers=self.centers,
            weights=self.weights,
            spacing=self.spacing,
            region=json.dumps(self.region, sort_keys=True),
        )
        stem = path[:-4] if path.endswith(".npz") else path
        manifest = {
            "kind": self.kind,
            "size": self.size,
            "spacing": self.spacing,
            "region": self.region,
            "total_mass": self.total_mass(),
        }
        with open(stem + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)

    @staticmethod
    def load(path: str) -> "Net":
        data = np.load(path if path.endswith(".npz") else path + ".npz",
                       allow_pickle=False)
        return Net(
            kind=str(data["kind"]),
            centers=data["centers"],
            weights=data["weights"],
            spacing=float(data["spacing"]),
            region=json.loads(str(data["region"])),
        )


def _psi_cap(radius: float) -> float:
    """Hyperspherical colatitude of the HS ball: ||g-1|| = 2 sqrt2 sin(psi/2)."""
    x = radius / (2.0 * math.sqrt(2.0))
    if x >= 1.0:
        return math.pi
    return 2.0 * math.asin(x)


def ball_volume(kind: str, radius: float, chart_half_width: float = 2.0) -> float:
    """Haar mass of the HS ball around the identity.

    SU(2) has the closed form 2 pi (psi - sin psi cos psi); for SL(2,R)
    the exp-chart integral is evaluated on a fine midpoint grid clipped
    to the chart box of the given half width.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if kind == SU2:
        psi = _psi_cap(radius)
        return 2.0 * math.pi * (psi - math.sin(psi) * math.cos(psi))
    if kind == SL2R:
        n = 80
        half = min(chart_half_width, 1.5 * radius)
        xs = (np.arange(n) + 0.5) / n * 2 * half - half
        X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
        coords = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
        mats = sl2r_exp(coords)
        d2 = ((mats - np.eye(2)) ** 2).sum(axis=(1, 2))
        dens = _haar_density_sl2r(coords)
        cell = (2 * half / n) ** 3
        return float(dens[d2 < radius**2].sum() * cell)
    raise ValueError(f"unknown group kind {kind!r}")


def _su2_grid(spacing: float, psi_max: float, region: dict) -> Net:
    """Latitude-adaptive product grid; weights are exact band integrals."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    # chordal cell half-diagonal sqrt2/2 * arc diag <= spacing
    h_arc = spacing * math.sqrt(2.0) / math.sqrt(3.0)
    n_psi = max(1, math.ceil(psi_max / h_arc))
    d_psi = psi_max / n_psi
    quats, weights, half_diags = [], [], []

    def psi_int(lo, hi):
        return 0.5 * ((hi - math.sin(hi) * math.cos(hi))
                      - (lo - math.sin(lo) * math.cos(lo)))

    for i in range(n_psi):
        p_lo, p_hi = i * d_psi, (i + 1) * d_psi
        p_mid = 0.5 * (p_lo + p_hi)
        s_max = max(math.sin(p_lo), math.sin(p_hi)) if p_hi <= math.pi / 2 or p_lo >= math.pi / 2 else 1.0
        w_psi = psi_int(p_lo, p_hi)
        n_th = max(1, math.ceil(s_max * math.pi / h_arc))
        d_th = math.pi / n_th
        for j in range(n_th):
            t_lo, t_hi = j * d_th, (j + 1) * d_th
            t_mid = 0.5 * (t_lo + t_hi)
            t_max = max(math.sin(t_lo), math.sin(t_hi)) if t_hi <= math.pi / 2 or t_lo >= math.pi / 2 else 1.0
            w_th = math.cos(t_lo) - math.cos(t_hi)
            n_ph = max(1, math.ceil(s_max * t_max * 2.0 * math.pi / h_arc))
            d_ph = 2.0 * math.pi / n_ph
            arc_half = 0.5 * math.sqrt(
                d_psi**2 + (s_max * d_th) ** 2 + (s_max * t_max * d_ph) ** 2
            )
            for k in range(n_ph):
                ph = (k + 0.5) * d_ph
                sp, cp = math.sin(p_mid), math.cos(p_mid)
                stt, ct = math.sin(t_mid), math.cos(t_mid)
                quats.append(
                    (cp, sp * stt * math.cos(ph), sp * stt * math.sin(ph), sp * ct)
                )
                weights.append(w_psi * w_th * d_ph)
                half_diags.append(arc_half)
    quats = np.array(quats)
    mats = su2_from_quaternion_batch(quats)
    actual = math.sqrt(2.0) * max(half_diags)
    return Net(kind=SU2, centers=mats, weights=np.array(weights),
               spacing=min(actual, spacing), region=region)


def su2_from_quaternion_batch(quats: np.ndarray) -> np.ndarray:
    out = np.empty(quats.shape[:-1] + (2, 2), dtype=complex)
    a = quats[..., 0] + 1j * quats[..., 3]
    b = quats[..., 2] + 1j * quats[..., 1]
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = -np.conj(b)
    out[..., 1, 1] = np.conj(a)
    return out


def _sl2r_box(spacing: float, half_width: float) -> Net:
    if spacing <= 0 or half_width <= 0:
        raise ValueError("spacing and half_width must be positive")
    h = spacing * 2.0 / math.sqrt(3.0)
    n = max(1, math.ceil(2.0 * half_width / h))
    h = 2.0 * half_width / n
    xs = -half_width + (np.arange(n) + 0.5) * h
    X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
    coords = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    mats = sl2r_exp(coords)
    dens = _haar_density_sl2r(coords)
    # chart cells are HS cells only to first order; the chart derivative is
    # 1 + O(s), harmless at these box sizes
    return Net(
        kind=SL2R,
        centers=mats,
        weights=dens * h**3,
        spacing=h * math.sqrt(3.0) / 2.0,
        region={"type": "box", "half_width": half_width},
    )


def build_net(kind: str, spacing: float, region: Optional[dict] = None) -> Net:
    """Build a net covering a region with the requested covering radius.

    Regions: {"type": "full"} (SU(2) only), {"type": "ball", "radius": R}
    (SU(2)), {"type": "box", "half_width": a} (SL(2,R) exp chart).
    """
    region = dict(region) if region else {"type": "full"}
    if kind == SU2:
        rtype = region.get("type", "full")
        if rtype == "full":
            return _su2_grid(spacing, math.pi, {"type": "full"})
        if rtype == "ball":
            radius = float(region["radius"])
            if radius <= 0:
                raise ValueError("ball radius must be positive")
            return _su2_grid(spacing, _psi_cap(radius),
                             {"type": "ball", "radius": radius})
        raise ValueError(f"unsupported SU(2) region {rtype!r}")
    if kind == SL2R:
        if region.get("type") != "box":
            raise ValueError("SL(2,R) nets use exp-chart boxes")
        return _sl2r_box(spacing, float(region["half_width"]))
    raise ValueError(f"unknown group kind {kind!r}")


class IntervalNet:
    """Uniform net on [0, 1] for the projective slope chart."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one cell")
        self.size = n
        self.centers = (np.arange(n) + 0.5) / n
        self.weights = np.full(n, 1.0 / n)
        self.spacing = 0.5 / n

    def nearest(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        idx = np.floor(xs * self.size).astype(int)
        return np.clip(idx, 0, self.size - 1)
