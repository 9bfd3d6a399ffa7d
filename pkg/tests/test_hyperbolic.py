import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow import hyperbolic as hy
from geoflow.errors import DegenerateEndpoints, NoReturn, NotInFlowBox, NotInPartial, OutsideDisk, PreconditionError
from geoflow.hyperbolic.rectangles import ball_times

DIAMETER = hy.Geodesic(math.pi, 0.0)


def geodesics(n, seed):
    rng = np.random.default_rng(seed)
    return [hy.random_geodesic(rng) for _ in range(n)]


def disk_points(rng, n, radius=0.95):
    r = radius * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


seeds = st.integers(0, 2**32 - 1)


def test_geodesic_point_examples():
    assert abs(DIAMETER.point(1)) == pytest.approx(math.tanh(0.5), abs=1e-15)
    c = geodesics(1, 0)[0]
    assert c(0) == c.point(0)
    assert hy.hyp_dist(c(2), c(5)) == pytest.approx(3, abs=1e-10)
    with pytest.raises(DegenerateEndpoints):
        hy.Geodesic(1.0, 1.0 + 2 * math.pi)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-6, 6), st.floats(-6, 6))
def test_geodesics_have_unit_speed(seed, t, u):
    c = geodesics(1, seed)[0]
    assert hy.hyp_dist(c(t), c(u)) == pytest.approx(abs(t - u), abs=1e-8)


def test_hyp_dist_examples():
    r = math.tanh(0.5)
    assert hy.hyp_dist(0, r) == pytest.approx(1, abs=1e-15)
    assert hy.hyp_dist(0.3 + 0.2j, 0.3 + 0.2j) == 0
    rng = np.random.default_rng(1)
    p, q = disk_points(rng, 100), disk_points(rng, 100)
    assert np.allclose(hy.hyp_dist(p, q), hy.hyp_dist(q, p), atol=1e-12)
    with pytest.raises(OutsideDisk):
        hy.hyp_dist(0, 1)


def test_triangle_inequality():
    rng = np.random.default_rng(2)
    p, q, w = (disk_points(rng, 500) for _ in range(3))
    assert np.all(hy.hyp_dist(p, w) <= hy.hyp_dist(p, q) + hy.hyp_dist(q, w) + 1e-9)


def test_busemann_examples():
    c = geodesics(1, 3)[0]
    assert hy.busemann(c, c(2)) == pytest.approx(-2, abs=1e-10)
    assert hy.busemann(c, c(0)) == pytest.approx(0, abs=1e-12)
    assert hy.busemann_backward(c, c(2)) == pytest.approx(2, abs=1e-10)
    with pytest.raises(OutsideDisk):
        hy.busemann(c, 1.5)


def test_busemann_is_1_lipschitz():
    rng = np.random.default_rng(4)
    c = hy.random_geodesic(rng)
    p, q = disk_points(rng, 1000), disk_points(rng, 1000)
    assert np.all(np.abs(hy.busemann(c, p) - hy.busemann(c, q)) <= hy.hyp_dist(p, q) + 1e-9)


@pytest.mark.parametrize("s", [0.1, 0.3, 1.0])
def test_gx_distance_along_flow(s):
    c = geodesics(1, 5)[0]
    assert hy.gx_distance(c, c.flow(s)) == pytest.approx(s, abs=1e-6)


def test_gx_distance_zero_and_symmetry():
    cs = geodesics(200, 6)
    assert hy.gx_distance(cs[0], cs[0]) == 0
    for a, b in zip(cs[::2], cs[1::2]):
        assert hy.gx_distance(a, b) == pytest.approx(hy.gx_distance(b, a), abs=1e-8)


def test_gx_tail_bound_is_below_tolerance():
    from geoflow.hyperbolic.geometry import gx_tail_bound, gx_truncation
    for d0 in (0.0, 0.5, 3.0):
        assert gx_tail_bound(d0, gx_truncation(d0, 1e-8)) <= 1e-8 / 2


def test_bracket_examples():
    c, c2, c3 = geodesics(3, 7)
    b = hy.bracket(c, c)
    assert (b.theta_minus, b.theta_plus) == (c.theta_minus, c.theta_plus)
    assert abs(b(0) - c(0)) <= 1e-10
    outer = hy.bracket(hy.bracket(c, c2), c3)
    direct = hy.bracket(c, c3)
    assert (outer.theta_minus, outer.theta_plus) == (direct.theta_minus, direct.theta_plus)
    with pytest.raises(DegenerateEndpoints):
        hy.bracket(c, hy.Geodesic(c.theta_plus + 1, c.theta_minus))


def test_bracket_defining_levels():
    cs = geodesics(300, 8)
    worst = 0.0
    for a, b in zip(cs[::3], cs[1::3]):
        d = hy.bracket(a, b)
        worst = max(worst, abs(hy.busemann(b, d(0))))
        # g_v a and <a, b> share the backward endpoint and backward level
        g = a.flow(hy.v_time(a, b))
        assert g.theta_minus == d.theta_minus
        worst = max(worst, abs(hy.busemann_backward(g, d(0))))
    assert worst <= 1e-9


def test_bracket_identities_on_triples():
    cs = geodesics(1500, 9)
    for x, y, z in zip(cs[::3], cs[1::3], cs[2::3]):
        left = hy.bracket(x, hy.bracket(y, z))
        right = hy.bracket(x, z)
        assert (left.theta_minus, left.theta_plus) == (right.theta_minus, right.theta_plus)
        assert abs(left(0) - right(0)) <= 1e-9
        left = hy.bracket(hy.bracket(x, y), z)
        assert (left.theta_minus, left.theta_plus) == (right.theta_minus, right.theta_plus)
        assert abs(left(0) - right(0)) <= 1e-9


def test_v_time_examples():
    c = geodesics(1, 10)[0]
    assert hy.v_time(c, c) == pytest.approx(0, abs=1e-12)
    c2 = hy.horocycle_shift(c, 0.05)
    assert hy.v_time(c, c2) == pytest.approx(0, abs=1e-10)


def test_v_time_continuity():
    c = geodesics(1, 11)[0]
    rng = np.random.default_rng(11)
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        c2 = hy.rotate_about(c.flow(eps * rng.normal()), eps * rng.normal())
        ratios.append(abs(hy.v_time(c, c2)) / hy.gx_distance(c, c2, tol=1e-12))
    assert max(ratios) < 10


def test_strong_stable_membership():
    c = geodesics(1, 12)[0]
    assert hy.is_strong_stable(c, c, 1e-3)
    assert not hy.is_strong_stable(c, c.flow(0.01), 1.0)
    c2 = hy.horocycle_shift(c, 0.01)
    assert c2.theta_plus == c.theta_plus
    assert hy.is_strong_stable(c, c2, 0.1)
    c3 = hy.horocycle_shift(c, 0.01, stable=False)
    assert hy.is_strong_unstable(c, c3, 0.1) and not hy.is_strong_stable(c, c3, 0.1)


def test_make_rectangle_examples():
    c = geodesics(1, 13)[0]
    small = hy.Arc.around(c.theta_minus, 1e-6), hy.Arc.around(c.theta_plus, 1e-6)
    rect = hy.make_rectangle(c, 10, *small)
    assert rect.contains(c)
    with pytest.raises(PreconditionError):
        hy.make_rectangle(c, 10, small[0], small[0])
    with pytest.raises(NotInPartial):
        hy.make_rectangle(c, 10, hy.Arc.around(c.theta_minus, 0.5), hy.Arc.around(c.theta_plus, 0.5))
    with pytest.raises(PreconditionError):
        hy.make_rectangle(c, 5, *small)


def test_maximal_rectangle_is_tight():
    c = geodesics(1, 14)[0]
    rect = hy.maximal_rectangle(c, 10)
    delta = rect.uplus.width / 2
    wider = hy.Arc.around(c.theta_minus, delta * 1.01), hy.Arc.around(c.theta_plus, delta * 1.01)
    with pytest.raises(NotInPartial):
        hy.make_rectangle(c, 10, *wider)


def test_rect_geodesic_properties():
    rng = np.random.default_rng(15)
    rect = hy.maximal_rectangle(hy.random_geodesic(rng), 10)
    c = rect.center
    eta = hy.rect_geodesic(rect, c.theta_minus, c.theta_plus)
    assert abs(eta(0) - c(0)) <= 1e-10
    b1, b2 = rect.balls
    for eta in rect.sample(rng, 300):
        assert abs(hy.busemann(c, eta(0))) <= 1e-10
        assert ball_times(eta, b1)[1] < 0 < ball_times(eta, b2)[0]
        assert hy.hyp_dist(c(0), eta(0)) <= 2


def test_proj_rect_round_trip():
    rng = np.random.default_rng(16)
    rect = hy.maximal_rectangle(hy.random_geodesic(rng), 10)
    for eta in rect.sample(rng, 20):
        assert hy.proj_rect(rect, eta, 0.1)(0) == pytest.approx(eta(0), abs=1e-10)
        back = hy.proj_rect(rect, eta.flow(0.05), 0.1)
        assert hy.gx_distance(back, eta, tol=1e-12) <= 1e-8
    with pytest.raises(NotInFlowBox):
        hy.proj_rect(rect, eta.flow(0.5), 0.1)


def test_return_time_examples():
    rng = np.random.default_rng(17)
    c = hy.random_geodesic(rng)
    rect = hy.maximal_rectangle(c, 10).sub((0.25, 0.75), (0.25, 0.75))
    target = hy.make_rectangle(c.flow(0.05), 10, rect.uminus, rect.uplus)
    assert hy.return_time(rect, target, c, 0.1) == pytest.approx(0.05, abs=1e-10)
    assert hy.return_time(rect, rect, c, 0.1) == 0
    with pytest.raises(NoReturn):
        hy.return_time(rect, target, c, 0.01)


def test_verifier_config_validation():
    with pytest.raises(PreconditionError):
        hy.VerifierConfig(alpha=1.0)
    with pytest.raises(PreconditionError):
        hy.VerifierConfig(samples=0)
    with pytest.raises(PreconditionError):
        hy.verify("no_such_lemma")


@pytest.fixture(scope="module")
def small_reports():
    return hy.verify_all(hy.VerifierConfig(samples=100, seed=1))


def test_all_lemmas_pass_small(small_reports):
    assert [r.lemma_id for r in small_reports] == list(hy.LEMMAS)
    failed = [(r.lemma_id, r.detail) for r in small_reports if not r.passed]
    assert not failed


def test_verifier_is_deterministic(small_reports):
    again = hy.verify("distance_bounds", hy.VerifierConfig(samples=100, seed=1))
    assert again.row() == small_reports[0].row()


def test_holder_exponent_reported(small_reports):
    report = next(r for r in small_reports if r.lemma_id == "proj_holder")
    assert report.worst_ratio >= 0.45 and math.isfinite(report.constants["K"])
