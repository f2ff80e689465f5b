"""Escape construction: counting, sampling, bucket pigeonhole, curves."""

import math

import numpy as np
import pytest

from gaplab.escape import (
    EscapeConfig,
    build_T,
    build_Y,
    count_Y,
    escape_curve,
    fit_escape_exponent,
    stabilizer_count,
    verify_claim1,
)
from gaplab.groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    rational_near_identity_triple,
    sanov_pair,
    su2_from_quaternion,
)
from gaplab.measures import SubgroupSpec
from gaplab.words import is_reduced, word_length


def _brute_count(M, a, b, ell):
    """All no-backtrack letter sequences with the required endpoints."""
    letters = [(i, s) for i in range(M) for s in (1, -1)]
    total = 0
    stack = [[(a, 1)]]
    while stack:
        w = stack.pop()
        if len(w) == ell:
            total += w[-1] == (b, 1)
            continue
        for l in letters:
            if l != (w[-1][0], -w[-1][1]):
                stack.append(w + [l])
    return total


@pytest.mark.parametrize(
    "M,a,b,ell,expected",
    [(3, 0, 1, 4, 21), (2, 0, 1, 4, 7), (3, 0, 2, 5, 104), (2, 1, 0, 6, 61)],
)
def test_count_Y_frozen(M, a, b, ell, expected):
    assert count_Y(M, a, b, ell) == expected
    assert _brute_count(M, a, b, ell) == expected


def test_count_Y_endpoint_sum():
    # words from (a,+1) to any other positive letter are a subset of all
    # (2M-1)^(ell-1) no-backtrack continuations
    M, ell = 3, 5
    by_end = sum(count_Y(M, 0, b, ell) for b in range(1, M))
    assert 0 < by_end < (2 * M - 1) ** (ell - 1)


@pytest.fixture(scope="module")
def fixture_cfg():
    return EscapeConfig(
        base=rational_near_identity_triple(),
        ell=9,
        a=0,
        b=1,
        bucket_resolution=0.3,
        sample_cap=300,
        seed=1,
    )


@pytest.fixture(scope="module")
def fixture_T(fixture_cfg):
    return build_T(fixture_cfg)


def test_build_Y_structure(fixture_cfg):
    ys = build_Y(fixture_cfg)
    codes = ys.codes
    assert codes.shape[1] == 9
    assert ys.total == 65104
    assert ys.sampled and codes.shape[0] == 300
    # first letter (a, +1) has code 0, last letter (b, +1) has code 2
    assert (codes[:, 0] == 0).all()
    assert (codes[:, -1] == 2).all()
    # no backtracking: adjacent letters are never mutual inverses
    assert ((codes[:, 1:] ^ 1) != codes[:, :-1]).all()
    # rows distinct
    assert len(np.unique(codes, axis=0)) == codes.shape[0]


def test_build_Y_exhaustive_when_under_cap():
    cfg = EscapeConfig(base=rational_near_identity_triple(), ell=4, a=0, b=1,
                       sample_cap=10_000, seed=5)
    ys = build_Y(cfg)
    assert not ys.sampled
    assert ys.codes.shape[0] == ys.total == count_Y(3, 0, 1, 4)


def test_build_Y_deterministic(fixture_cfg):
    first = build_Y(fixture_cfg).codes
    second = build_Y(fixture_cfg).codes
    assert (first == second).all()
    other = EscapeConfig(
        base=fixture_cfg.base, ell=9, a=0, b=1, bucket_resolution=0.3,
        sample_cap=300, seed=2,
    )
    assert not (build_Y(other).codes == first).all()


def test_build_T_frozen_report(fixture_T):
    T, rep = fixture_T
    assert rep.total_Y == 65104
    assert rep.bucket_size == 3
    assert rep.t_size == 2
    assert rep.epsilon_prime == pytest.approx(0.3163795616144687, rel=1e-6)
    assert rep.g0_word[0] == (0, 1) and rep.g0_word[-1] == (1, 1)
    assert len(rep.g0_word) == 9


def test_T_elements_near_identity(fixture_T):
    T, rep = fixture_T
    norms = sorted(g.hs_norm() for g in T.elements)
    assert norms[-1] == pytest.approx(rep.epsilon_prime, rel=1e-9)
    assert norms[0] == pytest.approx(0.242669, rel=1e-4)
    for g in T.elements:
        assert is_reduced(g.word)
        # cube words with one cancelled seam pair: 6*ell - 2m letters
        assert word_length(g.word) == 52


def test_claim1(fixture_T):
    T, _ = fixture_T
    rep = verify_claim1(T, ell=9, n_max=2)
    assert rep.ok
    assert rep.checked == 16
    assert rep.violations == []


def test_singleton_bucket_rejected():
    # integer matrices cannot collide at coarse resolution
    cfg = EscapeConfig(base=sanov_pair(), ell=4, bucket_resolution=0.25,
                       sample_cap=500, seed=0)
    with pytest.raises(ValueError, match="singleton"):
        build_T(cfg)


def test_config_validation():
    with pytest.raises(ValueError, match="differ"):
        EscapeConfig(base=rational_near_identity_triple(), ell=9, a=1, b=1)
    with pytest.raises(ValueError, match="ell"):
        EscapeConfig(base=rational_near_identity_triple(), ell=3)


def _rot(th):
    c, s = math.cos(th), math.sin(th)
    return GroupElement(SL2R, np.array([[c, -s], [s, c]]))


def test_stabilizer_rotation_axis():
    T = GeneratorSet((_rot(0.3), _rot(0.7)), freeness="assumed")
    rep = stabilizer_count(T, v=[1.0, 0.0, -1.0], n=3)
    assert (rep.fixed, rep.total) == (36, 36)
    assert rep.ratio == 1.0
    off = stabilizer_count(T, v=[1.0, 0.0, 1.0], n=3)
    assert (off.fixed, off.total) == (0, 36)


def test_stabilizer_su2_diagonal_axis():
    def diag(th):
        return GroupElement(SU2, np.diag([np.exp(1j * th), np.exp(-1j * th)]))

    T = GeneratorSet((diag(0.2), diag(0.5)), freeness="assumed")
    assert stabilizer_count(T, v=[1, 0, 0], n=2).fixed == 12
    assert stabilizer_count(T, v=[0, 1, 0], n=2).fixed == 0
    assert stabilizer_count(T, v=[0, 0, 1], n=2).fixed == 0


def test_stabilizer_generic_for_fixture(fixture_T):
    T, _ = fixture_T
    assert stabilizer_count(T, v=[1.0, 0.0, -1.0], n=3).fixed == 0


@pytest.fixture(scope="module")
def rotation_rows(fixture_T):
    T, _ = fixture_T
    return escape_curve(T, SubgroupSpec("rotation"),
                        deltas=[0.025, 0.05, 0.1], n_max=5)


def test_escape_curve_frozen(rotation_rows):
    by = {(r.n, r.delta): r.mass for r in rotation_rows}
    assert by[(0, 0.05)] == 1.0
    assert by[(1, 0.05)] == pytest.approx(0.25)
    assert by[(2, 0.05)] == pytest.approx(7 / 64)
    assert by[(5, 0.025)] == pytest.approx(0.020514, abs=1e-5)
    assert by[(5, 0.05)] == pytest.approx(0.023884, abs=1e-5)
    assert by[(5, 0.1)] == pytest.approx(0.060543, abs=1e-5)


def test_escape_curve_monotone(rotation_rows):
    deltas = sorted({r.delta for r in rotation_rows})
    for d in deltas:
        masses = [r.mass for r in sorted(rotation_rows, key=lambda r: r.n)
                  if r.delta == d]
        assert all(a >= b for a, b in zip(masses, masses[1:]))
    # pointwise monotone in delta as well
    for n in range(6):
        per = [next(r.mass for r in rotation_rows
                    if r.n == n and r.delta == d) for d in deltas]
        assert all(a <= b for a, b in zip(per, per[1:]))


def test_fit_escape_exponent(rotation_rows):
    alpha = fit_escape_exponent(rotation_rows)
    assert alpha == pytest.approx(0.78069, abs=1e-4)
    # a single delta cannot support a slope fit
    single = [r for r in rotation_rows if r.delta == 0.05]
    assert math.isnan(fit_escape_exponent(single))
