import math
from fractions import Fraction

import numpy as np
import pytest

from gaplab.groups import SL2R, GeneratorSet, GroupElement, sanov_pair
from gaplab.projline import (
    Arc,
    CircleSet,
    Iv,
    NoCertificate,
    PingPongCertificate,
    ProjectivePoint,
    arc_image,
    certify_free,
    moebius_apply,
    verify_certificate,
)


def elt(rows):
    return GroupElement(SL2R, np.array(rows, dtype=float))


def test_projective_point_slope_round_trip():
    for x in (-3.0, -1.0, 0.0, 0.5, 7.0):
        p = ProjectivePoint.from_slope(x)
        assert p.slope() == pytest.approx(x, abs=1e-12)
    inf = ProjectivePoint.from_vector([1.0, 0.0])
    assert inf.slope() == math.inf


def test_moebius_action_on_slopes():
    a = sanov_pair().elements[0]  # x -> x + 2
    p = moebius_apply(a, ProjectivePoint.from_slope(1.5))
    assert p.slope() == pytest.approx(3.5, abs=1e-12)
    inf = moebius_apply(a, ProjectivePoint.from_vector([1.0, 0.0]))
    assert inf.slope() == math.inf
    b = sanov_pair().elements[1]  # x -> x / (2x + 1)
    q = moebius_apply(b, ProjectivePoint.from_slope(1.0))
    assert q.slope() == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_circle_set_complement_and_containment():
    # the closed interval [-1, 0] on the slope line
    s = CircleSet(inf_in=False, parts=(Iv(Fraction(-1), True, Fraction(0), True),))
    c = s.complement()
    assert c.inf_in
    assert c.contains_slope(Fraction(1))
    assert not c.contains_slope(Fraction(0))
    assert not c.contains_slope(Fraction(-1, 2))
    assert s.intersect(c).is_empty()
    assert s.disjoint_from(c)


def test_arc_through_infinity():
    # starting at inf and moving through increasing angle sweeps slopes
    # downward, so Arc(None, 1) is {inf} together with slopes >= 1
    arc = Arc(None, 1.0, True, True)
    s = arc.to_set()
    assert s.inf_in
    assert s.contains_slope(2.0)
    assert not s.contains_slope(0.5)
    assert not s.contains_slope(-4.0)


def test_arc_image_under_shear():
    a = sanov_pair().elements[0]
    arc = Arc(Fraction(1), Fraction(0), True, True)  # slopes in [0, 1]
    img = arc_image(a.exact, arc)
    s = img.to_set()
    assert s.contains_slope(Fraction(5, 2))
    assert not s.contains_slope(Fraction(0))


def test_sanov_pair_is_certified_free():
    cert = certify_free(sanov_pair())
    assert isinstance(cert, PingPongCertificate)
    assert cert.margin > 0
    assert verify_certificate(cert, sanov_pair())


def test_certificate_json_round_trip():
    cert = certify_free(sanov_pair())
    back = PingPongCertificate.from_json(cert.to_json())
    assert back.margin == pytest.approx(cert.margin, abs=1e-15)
    assert verify_certificate(back, sanov_pair())


def test_modular_shears_are_not_certified():
    # [[1,1],[0,1]] and [[1,0],[1,1]] generate SL(2,Z); no table exists
    g = GeneratorSet((elt([[1, 1], [0, 1]]), elt([[1, 0], [1, 1]])))
    out = certify_free(g, budget=200)
    assert isinstance(out, NoCertificate)
    assert out.reason


def test_commuting_powers_are_not_certified():
    g = GeneratorSet((elt([[1, 2], [0, 1]]), elt([[1, 4], [0, 1]])))
    out = certify_free(g, budget=200)
    assert isinstance(out, NoCertificate)


def test_hyperbolic_pair_certified_with_positive_margin():
    # ab and ba inside the Sanov group; free, both hyperbolic
    g = GeneratorSet((elt([[5, 2], [2, 1]]), elt([[1, 2], [2, 5]])))
    cert = certify_free(g)
    assert isinstance(cert, PingPongCertificate)
    assert cert.margin > 1e-3
    assert verify_certificate(cert, g)


def test_certifier_rejects_su2_input():
    from gaplab.groups import lps_p5

    with pytest.raises(ValueError):
        certify_free(lps_p5())
