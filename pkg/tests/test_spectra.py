"""Finite-dimensional SU(2) irreps and averaging spectra."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaplab.groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    lps_p5,
    su2_from_quaternion,
)
from gaplab.measures import symmetrize
from gaplab.su2reps import (
    IRREP_CAP,
    averaging_matrix,
    averaging_spectra,
    averaging_spectrum,
    character,
    exceptional_count,
    hermiticity_defect,
    irrep_matrix,
    second_gap_census,
)

unit_quats = st.tuples(*[st.floats(-1, 1) for _ in range(4)]).filter(
    lambda q: sum(x * x for x in q) > 1e-4
).map(lambda q: tuple(x / math.sqrt(sum(y * y for y in q)) for x in q))


def _el(q):
    return GroupElement(SU2, su2_from_quaternion(q))


@given(q=unit_quats, n=st.integers(1, 64))
def test_character_oracle(q, n):
    g = _el(q)
    tr = np.trace(irrep_matrix(g, n))
    assert tr.imag == pytest.approx(0.0, abs=1e-10)
    assert tr.real == pytest.approx(character(g, n), abs=1e-10)


@pytest.mark.parametrize("n", [120, 256, 512])
def test_character_oracle_high_levels(n):
    rng = np.random.default_rng(3)
    q = rng.normal(size=4)
    g = _el(q / np.linalg.norm(q))
    tr = np.trace(irrep_matrix(g, n))
    assert tr.real == pytest.approx(character(g, n), abs=1e-9)


@pytest.mark.parametrize("n", [5, 120, 512])
def test_unitarity(n):
    rng = np.random.default_rng(4)
    q = rng.normal(size=4)
    M = irrep_matrix(_el(q / np.linalg.norm(q)), n)
    assert np.abs(M @ M.conj().T - np.eye(n + 1)).max() < 1e-12


@pytest.mark.parametrize("n", [7, 40, 200])
def test_homomorphism(n):
    rng = np.random.default_rng(5)
    q1, q2 = rng.normal(size=4), rng.normal(size=4)
    g = _el(q1 / np.linalg.norm(q1))
    h = _el(q2 / np.linalg.norm(q2))
    gh = GroupElement(SU2, g.matrix @ h.matrix)
    defect = np.abs(irrep_matrix(g, n) @ irrep_matrix(h, n) - irrep_matrix(gh, n))
    assert defect.max() < 1e-10


def test_special_elements():
    one = GroupElement(SU2, np.eye(2, dtype=complex))
    neg = GroupElement(SU2, -np.eye(2, dtype=complex))
    assert np.abs(irrep_matrix(one, 0) - 1.0).max() < 1e-15
    assert np.abs(irrep_matrix(one, 200) - np.eye(201)).max() < 1e-12
    assert np.abs(irrep_matrix(neg, 5) + np.eye(6)).max() < 1e-12
    assert np.abs(irrep_matrix(neg, 4) - np.eye(5)).max() < 1e-12


def test_diagonal_phases():
    th = 0.3
    g = GroupElement(SU2, np.diag([np.exp(1j * th), np.exp(-1j * th)]))
    M = irrep_matrix(g, 5)
    assert np.abs(M - np.diag(np.diagonal(M))).max() < 1e-12
    # weights n - 2i on the monomial basis
    assert np.angle(np.diagonal(M)) / th == pytest.approx([5, 3, 1, -1, -3, -5])


def test_level_validation():
    g = GroupElement(SU2, np.eye(2, dtype=complex))
    with pytest.raises(ValueError, match="cap"):
        irrep_matrix(g, IRREP_CAP + 1)
    with pytest.raises(ValueError, match="negative"):
        irrep_matrix(g, -1)
    h = GroupElement(SL2R, np.eye(2))
    with pytest.raises(ValueError, match="SU"):
        irrep_matrix(h, 3)


@pytest.fixture(scope="module")
def lps_mu():
    return symmetrize(lps_p5(), key_mode="word")


def test_averaging_hermitian(lps_mu):
    assert hermiticity_defect(lps_mu, 64) < 1e-10
    M = averaging_matrix(lps_mu, 17)
    assert np.abs(M - M.conj().T).max() == 0.0


def test_lps_within_kesten(lps_mu):
    bound = math.sqrt(5) / 3
    for eig in averaging_spectra(lps_mu, 40):
        assert np.abs(eig).max() <= bound + 1e-6
    assert exceptional_count(lps_mu, 30, k=3, tol=1e-6) == 0


def test_averaging_spectra_matches_single(lps_mu):
    sweep = averaging_spectra(lps_mu, 6)
    single = averaging_spectrum(lps_mu, 6)
    assert sweep[-1] == pytest.approx(single)


def test_near_identity_top_eigenvalue():
    # generators within eps of 1 keep the top eigenvalue above 1 - 2n*eps
    def rot(th, axis):
        q = [math.cos(th / 2), 0.0, 0.0, 0.0]
        q[axis] = math.sin(th / 2)
        return GroupElement(SU2, su2_from_quaternion(q))

    T = GeneratorSet((rot(0.01, 1), rot(0.01, 2)), freeness="assumed")
    mu = symmetrize(T, key_mode="word")
    eps = max(g.hs_norm() for g in T.elements)
    assert eps <= 0.01
    for n in (5, 10, 30):
        lam = averaging_spectrum(mu, n)[-1]
        assert lam >= 1 - 2 * n * eps


def test_lps_census_frozen():
    rows = second_gap_census(lps_p5(), 10)
    assert [(r.n, r.count_in_half_one, r.cumulative) for r in rows] == [
        (1, 0, 0), (2, 0, 0), (3, 0, 0), (4, 0, 0), (5, 0, 0),
        (6, 3, 3), (7, 0, 3), (8, 0, 3), (9, 0, 3), (10, 3, 6),
    ]


def test_census_grows_as_radius_shrinks():
    def rot(th, axis):
        q = [math.cos(th / 2), 0.0, 0.0, 0.0]
        q[axis] = math.sin(th / 2)
        return GroupElement(SU2, su2_from_quaternion(q))

    wide = GeneratorSet((rot(0.2, 1), rot(0.2, 2)), freeness="assumed")
    tight = GeneratorSet((rot(0.05, 1), rot(0.05, 2)), freeness="assumed")
    c_wide = second_gap_census(wide, 20)[-1].cumulative
    c_tight = second_gap_census(tight, 20)[-1].cumulative
    assert (c_wide, c_tight) == (171, 230)
    assert c_wide < c_tight
