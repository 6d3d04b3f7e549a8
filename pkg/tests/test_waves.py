import math

import numpy as np
import pytest

import ovwave as ow
from conftest import quadratic_speeds


def test_two_speeds_match_quadratic_oracle(vq100):
    points = ow.find_constant_speeds(vq100, 0.2)
    oracle = quadratic_speeds(100.0, 0.2)
    assert len(points) == 2
    assert points[0].c == pytest.approx(oracle[0], abs=1e-10)
    assert points[1].c == pytest.approx(oracle[1], abs=1e-10)
    assert points[0].branch == ow.BRANCH1
    assert points[1].branch == ow.BRANCH2


def test_no_speeds_below_onset(vq100):
    assert ow.find_constant_speeds(vq100, 0.01) == []


def test_tangency_reported_once_as_degenerate(vq100):
    points = ow.find_constant_speeds(vq100, 0.02)
    assert len(points) == 1
    assert points[0].branch == ow.DEGENERATE
    assert points[0].c == pytest.approx(1.0, abs=1e-8)


def test_residual_invariant_on_returned_points(vq100, vq2841, vq_half):
    for spec, hs in ((vq100, (0.03, 0.2, 1.0)), (vq2841, (0.8, 1.5)), (vq_half, (3.0, 8.0))):
        for h in hs:
            for p in ow.find_constant_speeds(spec, h):
                assert abs(p.residual(spec)) <= 1e-10 * max(1.0, p.c)
                assert p.h == pytest.approx(p.c / spec.eval(p.c), rel=1e-10)


def test_never_more_than_two_speeds(vq100, vq_half):
    rng = np.random.default_rng(7)
    for _ in range(40):
        h = float(10.0 ** rng.uniform(-2.5, 2.0))
        for spec in (vq100, vq_half):
            assert len(ow.find_constant_speeds(spec, h)) <= 2


def test_slope_ordering_property(vq100, vq_half):
    # a speed with slope product above one is always accompanied by a larger one
    rng = np.random.default_rng(11)
    for _ in range(30):
        h = float(10.0 ** rng.uniform(-2.0, 1.5))
        for spec in (vq100, vq_half):
            points = ow.find_constant_speeds(spec, h)
            for p in points:
                if p.slope_product > 1.0 + 1e-8:
                    assert any(q.c > p.c for q in points)


@pytest.mark.parametrize("v_max", [100.0, 2.841, 1.0])
def test_critical_pair_symbolic_oracle(v_max):
    # for the rational family with zero safety distance the slope ratio is
    # c*V'/V = 2/(1+c^2), so the tangency sits at c = 1 with h = 2/v_max
    spec = ow.make_vq(v_max, 0.0)
    cp = ow.critical_pair(spec)
    assert cp.c_star == pytest.approx(1.0, abs=1e-8)
    assert cp.h_star == pytest.approx(2.0 / v_max, abs=1e-8)
    assert cp.h_hat == math.inf


def test_critical_pair_residuals_with_safety_distance(vq_half):
    cp = ow.critical_pair(vq_half)
    assert abs(cp.h_star * vq_half.eval(cp.c_star) - cp.c_star) <= 1e-10
    assert abs(cp.h_star * vq_half.deriv(cp.c_star) - 1.0) <= 1e-8
    assert cp.h_hat == math.inf  # positive safety distance always diverges


def test_branch_eval_reference_points(vq100, vq2841):
    p1 = ow.branch_eval(vq100, 0.2, 1)
    p2 = ow.branch_eval(vq100, 0.2, 2)
    assert p1.c == pytest.approx(0.0501, abs=1e-4)
    assert p2.c == pytest.approx(19.9499, abs=1e-4)
    assert p1.slope_product > 1.0 > p2.slope_product
    p3 = ow.branch_eval(vq2841, 1.5, 1)
    assert p3.c == pytest.approx(0.2492, abs=1e-4)


def test_branch_eval_matches_root_list(vq100):
    for h in (0.05, 0.2, 0.7):
        roots = ow.find_constant_speeds(vq100, h)
        assert ow.branch_eval(vq100, h, 1).c == pytest.approx(roots[0].c, rel=1e-12)
        assert ow.branch_eval(vq100, h, 2).c == pytest.approx(roots[1].c, rel=1e-12)


def test_branch_eval_domain_error_at_or_below_onset(vq100):
    cp = ow.critical_pair(vq100)
    with pytest.raises(ow.DomainError):
        ow.branch_eval(vq100, cp.h_star, 1)
    with pytest.raises(ow.DomainError):
        ow.branch_eval(vq100, 0.5 * cp.h_star, 2)


def test_branch_ordering_and_monotonicity(vq100):
    cp = ow.critical_pair(vq100)
    hs = np.linspace(cp.h_star + 0.005, 1.0, 25)
    c1s = [ow.branch_eval(vq100, float(h), 1).c for h in hs]
    c2s = [ow.branch_eval(vq100, float(h), 2).c for h in hs]
    for a, b in zip(c1s, c2s):
        assert a < cp.c_star < b
    assert all(x > y for x, y in zip(c1s, c1s[1:]))  # branch 1 decreasing
    assert all(x < y for x, y in zip(c2s, c2s[1:]))  # branch 2 increasing


def test_branch_derivative_sign_and_finite_difference(vq100):
    dh = 1e-5
    for h, which, sign in ((0.2, 1, -1.0), (0.2, 2, 1.0)):
        p = ow.branch_eval(vq100, h, which)
        d = ow.branch_derivative(vq100, p)
        assert math.copysign(1.0, d) == sign
        fd = (
            ow.branch_eval(vq100, h + dh, which).c
            - ow.branch_eval(vq100, h - dh, which).c
        ) / (2.0 * dh)
        assert d == pytest.approx(fd, rel=1e-4)


def test_branch_derivative_singular_at_tangency(vq100):
    point = ow.WavefrontPoint(h=0.02, c=1.0, slope_product=1.0, branch=ow.DEGENERATE)
    with pytest.raises(ow.SingularityError):
        ow.branch_derivative(vq100, point)


def test_find_constant_speeds_validates_h(vq100):
    with pytest.raises(ow.ParameterError):
        ow.find_constant_speeds(vq100, 0.0)
