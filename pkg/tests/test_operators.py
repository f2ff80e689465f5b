"""Discretized convolution operators: smoothing, translation, and the
almost-orthogonality / flattening / dyadic probes built on them."""

import math

import numpy as np
import pytest

from gaplab.escape import EscapeConfig, build_T
from gaplab.groups import (
    SL2R,
    SU2,
    GeneratorSet,
    GroupElement,
    rational_near_identity_triple,
    su2_from_quaternion,
)
from gaplab.measures import AtomicMeasure, power, symmetrize
from gaplab.nets import build_net
from gaplab.operators import (
    CotlarData,
    cotlar_stein_probe,
    dyadic_decompose,
    flattening_curve,
    littlewood_paley,
    measure_density,
    mixing_probe,
    net_ball_mass,
    op_P_delta,
    op_measure,
    op_translate,
)


def rot(theta, axis):
    q = np.zeros(4)
    q[0] = math.cos(theta / 2)
    q[axis] = math.sin(theta / 2)
    return GroupElement(SU2, su2_from_quaternion(q))


@pytest.fixture(scope="module")
def net_ball():
    return build_net(SU2, 2.0 ** -7, {"type": "ball", "radius": 0.04})


@pytest.fixture(scope="module")
def net_full():
    return build_net(SU2, 0.35, {"type": "full"})


@pytest.fixture(scope="module")
def net_box():
    return build_net(SL2R, 0.05, {"type": "box", "half_width": 0.35})


@pytest.fixture(scope="module")
def net_window():
    return build_net(SU2, 2.0 ** -5, {"type": "ball", "radius": 0.3})


@pytest.fixture(scope="module")
def escape_measure():
    cfg = EscapeConfig(
        base=rational_near_identity_triple(), ell=9, a=0, b=1,
        bucket_resolution=0.3, sample_cap=300, seed=1,
    )
    T, _ = build_T(cfg)
    return symmetrize(T, key_mode="word")


def wnorm(net, f):
    return math.sqrt(float(np.sum(net.weights * np.abs(f) ** 2)))


def test_net_ball_mass_matches_manual_sum(net_box):
    delta = 0.15
    total = 0.0
    for c, w in zip(net_box.centers, net_box.weights):
        if np.linalg.norm(c - np.eye(2)) <= delta:
            total += w
    assert net_ball_mass(net_box, delta) == pytest.approx(total, rel=1e-12)


def test_net_ball_mass_empty_ball_raises(net_ball):
    # the grid offsets cell centers off the identity by about 4e-3
    with pytest.raises(ValueError, match="ball"):
        net_ball_mass(net_ball, 0.003)


def test_p_delta_norm_and_constants(net_ball):
    p = op_P_delta(net_ball, 2.0 ** -6)
    assert p.ball_mass == pytest.approx(net_ball_mass(net_ball, 2.0 ** -6))
    assert p.norm2() == pytest.approx(0.827446, abs=1e-4)
    assert p.norm2() <= 1.05
    pv = p.matvec(np.ones(net_ball.size))
    diffs = net_ball.centers - np.eye(2)
    d1 = np.sqrt(np.abs(diffs * diffs.conj()).sum(axis=(1, 2)).real)
    interior = d1 <= 0.04 - 2.0 ** -6
    # at delta = 2 * spacing the cellwise ball masses still wobble by ~15%
    assert 0.75 <= pv[interior].min() and pv[interior].max() <= 1.1


def test_p_delta_weighted_self_adjoint(net_ball):
    p = op_P_delta(net_ball, 2.0 ** -6)
    diff = p.to_dense() - p.adjoint().to_dense()
    assert np.abs(diff).max() < 1e-12


def test_p_delta_full_net(net_full):
    p = op_P_delta(net_full, 0.8)
    assert p.norm2() == pytest.approx(0.969359, abs=1e-4)
    pv = p.matvec(np.ones(net_full.size))
    assert 0.8 <= pv.min() and pv.max() <= 1.1


def test_p_delta_preconditions(net_ball):
    with pytest.raises(ValueError, match="resolvable"):
        op_P_delta(net_ball, net_ball.spacing)
    big = build_net(SL2R, 0.05 / 1.5, {"type": "box", "half_width": 0.35})
    with pytest.raises(ValueError, match="dense cap"):
        op_P_delta(big, 0.2)


def test_translate_exact_bookkeeping(net_full):
    g = rot(0.4, 1)
    op = op_translate(g, net_full)
    # the full net has no boundary to clip against
    assert op.clipped_fraction == 0.0
    assert not op.clipped_flag
    ones = np.ones(net_full.size)
    assert np.array_equal(op.matvec(ones), ones)
    # the adjoint redistributes but conserves mass
    back = float(np.sum(net_full.weights * op.rmatvec(ones)))
    assert back == pytest.approx(net_full.total_mass(), rel=1e-12)
    rng = np.random.default_rng(2)
    f = rng.standard_normal(net_full.size)
    h = rng.standard_normal(net_full.size)
    lhs = float(np.sum(net_full.weights * op.matvec(f) * h))
    rhs = float(np.sum(net_full.weights * f * op.rmatvec(h)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_translate_roundtrip_on_smooth_function(net_full):
    g = rot(0.4, 1)
    smooth = np.cos(2.0 * net_full.embedded[:, 0]) + 0.3 * net_full.embedded[:, 1]
    back = op_translate(g.inverse(), net_full).matvec(
        op_translate(g, net_full).matvec(smooth))
    rel = np.linalg.norm(back - smooth) / np.linalg.norm(smooth)
    # two nearest-cell lookups at covering radius 0.35 cost ~11% here
    assert rel < 0.15


def test_translate_clipping_on_small_window(net_ball):
    # a 0.2-rotation moves the whole 0.04-window out of itself
    op = op_translate(rot(0.2, 1), net_ball)
    assert op.clipped_fraction == 1.0
    assert op.clipped_flag


def test_measure_op_adjoint_and_norm(net_full):
    mu = symmetrize(GeneratorSet((rot(0.2, 1), rot(0.2, 2)),
                                 freeness="assumed"), key_mode="word")
    op = op_measure(mu, net_full)
    assert op.norm2() == pytest.approx(1.024363, abs=1e-3)
    rng = np.random.default_rng(3)
    f = rng.standard_normal(net_full.size)
    h = rng.standard_normal(net_full.size)
    lhs = float(np.sum(net_full.weights * op.matvec(f) * h))
    rhs = float(np.sum(net_full.weights * f * op.rmatvec(h)))
    assert lhs == pytest.approx(rhs, rel=1e-12)
    # nearest-cell translation only approximates the symmetric continuum
    # operator, so the self-adjointness defect is large at this spacing
    defect = (op - op.adjoint()).norm2() / op.norm2()
    assert defect < 0.5


def test_identity_atom_density_is_normalized_bump(net_box):
    key = (0,)
    mu = AtomicMeasure(SL2R, "quantized_matrix", {key: 1.0},
                       resolution=1e-6, reps={key: np.eye(2)})
    dens = measure_density(mu, net_box, 0.15)
    vol = net_ball_mass(net_box, 0.15)
    inside = np.linalg.norm(net_box.centers - np.eye(2), axis=(1, 2)) <= 0.15
    assert np.array_equal(dens[inside], np.full(int(inside.sum()), 1.0 / vol))
    assert np.array_equal(dens[~inside], np.zeros(int((~inside).sum())))
    # the bump integrates to exactly the measure's mass
    assert float(np.sum(net_box.weights * dens)) == pytest.approx(1.0, rel=1e-12)


def test_measure_density_integral(net_box, escape_measure):
    dens = measure_density(escape_measure, net_box, 0.15)
    integral = float(np.sum(net_box.weights * dens))
    assert integral == pytest.approx(1.041102, rel=1e-5)
    assert 0.9 <= integral <= 1.1


def test_flattening_curve_small(net_box, escape_measure):
    rows, slope = flattening_curve(escape_measure, net_box, delta=0.15, n_max=3)
    assert [r.n for r in rows] == [0, 1, 2, 3]
    assert rows[0].l2_norm == pytest.approx(
        net_ball_mass(net_box, 0.15) ** -0.5, rel=1e-9)
    frozen = [8.889506, 5.019933, 3.119296, 2.872164]
    for row, want in zip(rows, frozen):
        assert row.l2_norm == pytest.approx(want, rel=1e-5)
    assert slope == pytest.approx(-0.557634, abs=1e-4)


def test_dyadic_decomposition_frozen(net_box, escape_measure):
    mu4 = power(escape_measure, 4)
    decomp, rep = dyadic_decompose(mu4, net_box, 0.1)
    assert rep.nonempty_levels == 5
    assert rep.level_cap == 10
    assert rep.overlap_multiplicity == pytest.approx(1.0)
    assert rep.sandwich_upper == pytest.approx(5.326722, rel=1e-5)
    assert rep.sandwich_lower == pytest.approx(5.925179, rel=1e-5)
    assert rep.sandwich_constant == pytest.approx(5.925179, rel=1e-5)
    fine = build_net(SL2R, 0.05 / 1.5, {"type": "box", "half_width": 0.35})
    _, rep2 = dyadic_decompose(mu4, fine, 0.1)
    assert rep2.sandwich_constant == pytest.approx(6.266365, rel=1e-4)
    ratio = rep2.sandwich_constant / rep.sandwich_constant
    assert 0.5 <= ratio <= 2.0


def test_dyadic_identity_atom_single_level(net_box):
    key = (0,)
    mu = AtomicMeasure(SL2R, "quantized_matrix", {key: 1.0},
                       resolution=1e-6, reps={key: np.eye(2)})
    decomp, rep = dyadic_decompose(mu, net_box, 0.1)
    assert rep.nonempty_levels == 1
    assert rep.overlap_multiplicity == pytest.approx(1.0)


def test_mixing_probe_constants(net_box):
    ones = np.ones(net_box.size)
    rep = mixing_probe(net_box, ones, ones, 0.15)
    # (1 * 1)(x) = total mass, so the probe value is mass^{48} * mass^{24}
    assert rep.lhs == pytest.approx(net_box.total_mass() ** 72, rel=1e-9)
    assert rep.p_delta_norm == pytest.approx(0.514608, abs=1e-4)


def test_littlewood_paley_telescoping_and_norms(net_window):
    pieces = [littlewood_paley(net_window, i) for i in range(4)]
    total = pieces[0]
    for p in pieces[1:]:
        total = total + p
    fine = op_P_delta(net_window, 2.0 ** -4)
    assert np.abs(total.to_dense() - fine.to_dense()).max() < 1e-12
    frozen = [0.967242, 0.392834, 0.418911, 0.506525]
    for p, want in zip(pieces, frozen):
        assert p.norm2() == pytest.approx(want, abs=2e-4)
        assert p.norm2() <= 2.1


def test_littlewood_paley_rejects_negative_index(net_window):
    with pytest.raises(ValueError, match="negative"):
        littlewood_paley(net_window, -1)


def test_cotlar_single_operator(net_ball):
    p = op_P_delta(net_ball, 2.0 ** -6)
    p.label = "P0"
    rep = cotlar_stein_probe([p], CotlarData((1.0,)), k=1, trials=10)
    assert rep.domination_ok
    assert rep.tail_ok and rep.worst_tail_ratio == 0.0
    assert rep.cs1_ok and rep.worst_cs1_ratio < 0.7


def test_cotlar_reports_undersized_phi(net_ball):
    p = op_P_delta(net_ball, 2.0 ** -6)
    p.label = "P0"
    rep = cotlar_stein_probe([p], CotlarData((0.5,)), k=1, trials=5)
    assert not rep.domination_ok
    i, j, root, bound = rep.failing_pairs[0]
    assert (i, j, bound) == (0, 0, 0.5)
    assert root == pytest.approx(0.827446, abs=1e-3)


def test_almost_orthogonality_rejects_wide_support(net_full):
    from gaplab.operators import almost_orthogonality_table

    wide = symmetrize(GeneratorSet((rot(math.pi, 1), rot(math.pi, 2)),
                                   freeness="assumed"), key_mode="word")
    with pytest.raises(ValueError, match="unit ball"):
        almost_orthogonality_table(wide, net_full, i_max=1)


def test_operator_algebra(net_ball):
    p = op_P_delta(net_ball, 2.0 ** -6)
    q = op_P_delta(net_ball, 2.0 ** -5)
    rng = np.random.default_rng(9)
    f = rng.standard_normal(net_ball.size)
    assert np.allclose((p + q).matvec(f), p.matvec(f) + q.matvec(f), atol=1e-12)
    assert np.allclose((p - q).matvec(f), p.matvec(f) - q.matvec(f), atol=1e-12)
    assert np.allclose(p.compose(q).matvec(f), p.matvec(q.matvec(f)), atol=1e-12)
    assert np.allclose(p.adjoint().adjoint().matvec(f), p.matvec(f), atol=1e-12)
