import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import expr_spec
from vrigid.direction_set import (Tolerances, audit_strip_properties, check_profile, estimate_h3_profile,
                                  jordan_curve, profile_from_top, sample_direction_set)
from vrigid.function_model import Affine, ExpAffine, ExpStrip, ExprCurve, FunctionSpec, Window, default_ladder

W3 = Window.square(3)
LADDER = default_ladder(W3)
F_X = FunctionSpec(Affine(0, 1, 0))
F_ZERO = FunctionSpec(Affine())
F_EXPY = expr_spec("exp(x)+y")


def _bin(profile, theta):
    return int(round(theta / profile.bin_width)) % profile.nbins


def test_sample_examples():
    s = sample_direction_set(F_X, W3, 500, seed=1)
    assert np.max(np.abs(s.directions[:, 2] - s.directions[:, 0])) < 1e-12
    s0 = sample_direction_set(F_ZERO, W3, 500, seed=1)
    assert np.all(s0.directions[:, 2] == 0)
    a = sample_direction_set(F_EXPY, W3, 300, seed=7)
    b = sample_direction_set(F_EXPY, W3, 300, seed=7)
    assert np.array_equal(a.directions, b.directions) and np.array_equal(a.p, b.p)


def test_sample_rejects_empty():
    with pytest.raises(ValueError):
        sample_direction_set(F_X, W3, 0)


def test_profile_examples():
    p = estimate_h3_profile(F_X, LADDER)
    assert p.top[_bin(p, 0)] == pytest.approx(0.70711, abs=0.01)
    assert p.top[_bin(p, math.pi / 2)] == pytest.approx(0.0, abs=0.01)
    assert p.top[_bin(p, math.pi)] == pytest.approx(-0.70711, abs=0.01)
    z = estimate_h3_profile(F_ZERO, LADDER)
    assert np.all(z.top == 0) and np.all(z.bottom == 0)
    e = estimate_h3_profile(F_EXPY, LADDER)
    i = _bin(e, math.pi / 2)
    assert e.top[i] == pytest.approx(0.70711, abs=0.01) and not e.top_saturated[i]
    assert e.top_saturated[_bin(e, 0)] and e.top[_bin(e, 0)] == 1


def test_profile_invariants_and_determinism():
    p = estimate_h3_profile(expr_spec("exp(x)*(2+cos(y))"), LADDER, seed=3)
    assert check_profile(p) == []
    anti = p.antipodal_index()
    assert np.max(np.abs(p.bottom + p.top[anti])) <= 1e-9
    assert np.all(p.top >= p.bottom) and np.all(p.top > -1)
    q = estimate_h3_profile(expr_spec("exp(x)*(2+cos(y))"), LADDER, seed=3)
    assert np.array_equal(p.top, q.top) and np.array_equal(p.top_saturated, q.top_saturated)


def test_jordan_curve_examples():
    g0 = jordan_curve(F_ZERO, 1.0, 64)
    assert np.all(g0[:, 2] == 0) and np.allclose(np.linalg.norm(g0, axis=1), 1)
    g = jordan_curve(F_X, 1.0, 8)
    assert np.allclose(g[0], [0.70711, 0, 0.70711], atol=1e-5)
    h = jordan_curve(F_EXPY, 2.0, 64)
    assert np.max(np.abs(h[32:] + h[:32])) < 1e-12
    with pytest.raises(ValueError):
        jordan_curve(F_X, 0.0, 8)


def test_audit_examples():
    for spec in (F_X, F_EXPY):
        s = sample_direction_set(spec, W3, 1000)
        p = estimate_h3_profile(spec, LADDER)
        rep = audit_strip_properties(s, p)
        assert rep.passed, rep.to_dict()
    # saturated bins of e^x + y are skipped by the convexity check
    assert estimate_h3_profile(F_EXPY, LADDER).top_saturated.any()


def test_audit_spike_reports_bin():
    p = estimate_h3_profile(F_X, LADDER)
    top = p.top.copy()
    top[100] += 0.2
    spiked = profile_from_top(p.thetas, top, p.top_saturated)
    rep = audit_strip_properties(sample_direction_set(F_X, W3, 200), spiked)
    assert not rep.checks["lsc"].passed
    assert rep.checks["lsc"].violations == [100]


def test_check_profile_rejects_broken_bottom():
    p = estimate_h3_profile(F_X, LADDER, nbins=36)
    broken = profile_from_top(p.thetas, p.top, p.top_saturated)
    object.__setattr__(broken, "bottom", broken.bottom + 0.1)
    assert check_profile(broken)


specs = st.sampled_from(["x", "exp(x)+y", "x^2+y^2", "sin(x)*y", "exp(x)*(2+cos(y))", "x*y-3*y"])


@settings(max_examples=15)
@given(specs, st.integers(0, 10_000))
def test_sample_symmetry_and_pole_exclusion(text, seed):
    s = sample_direction_set(expr_spec(text), W3, 300, seed)
    n = len(s) // 2
    assert np.array_equal(s.directions[:n], -s.directions[n:])
    assert np.max(np.abs(s.directions[:, 2])) < 1


@pytest.mark.parametrize("text", ["exp(x)+2*y", "sin(x)+0.5*y", "x^2-y"])
def test_case_a_two_point_vertical_circle(text):
    p = estimate_h3_profile(expr_spec(text), LADDER)
    i = _bin(p, math.pi / 2)
    # profile consistency tolerance is 1e-9
    assert abs(p.top[i] - p.bottom[i]) <= 2e-9


FAMILIES = {
    "affine": [Affine(0, 0, 0), Affine(1, 2, -1), Affine(-3, 0.1, 0.2), Affine(2, -5, 0), Affine(0, 0, 4)],
    "expstrip": [ExpStrip(1, 2, ExprCurve.parse("2+cos(y)")), ExpStrip(0, 1, ExprCurve.parse("exp(0.5*y)")),
                 ExpStrip(-2, -0.7, ExprCurve.parse("sin(y)")), ExpStrip(3, 0.3, ExprCurve.parse("y^2+1")),
                 ExpStrip(0, 1.5, ExprCurve.parse("-1"))],
    "expaffine": [ExpAffine(0, 1, 1, 1), ExpAffine(2, 3, -0.7, 1.5), ExpAffine(-1, -2, 0.5, 0.8),
                  ExpAffine(0, 0.5, 2, -1.2), ExpAffine(1, 1, -1, 0.4)],
}


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_convexity_passes_for_family_members(family):
    for body in FAMILIES[family]:
        spec = FunctionSpec(body)
        p = estimate_h3_profile(spec, LADDER)
        rep = audit_strip_properties(sample_direction_set(spec, W3, 500), p, Tolerances(tau_cvx=0.02))
        assert rep.checks["convexity"].passed, (body, rep.checks["convexity"].violations[:5])
