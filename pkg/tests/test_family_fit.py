import math

import numpy as np
import pytest

from conftest import expr_spec
from vrigid.family_fit import (FamilyFit, accept_threshold, all_fits, best_family, fit_affine, fit_exp_affine,
                               fit_exp_strip, fit_window, select_fit)
from vrigid.function_model import (Affine, ExpAffine, ExpStrip, ExprCurve, FunctionSpec, Window, evaluate,
                                   rotate_about_z)

W2 = Window.square(2)


def _dense_plane_rms(spec, window, n=201):
    X, Y = window.mesh(n, n)
    F = evaluate(spec, X, Y).ravel()
    A = np.column_stack([np.ones(F.size), X.ravel(), Y.ravel()])
    coef, *_ = np.linalg.lstsq(A, F, rcond=None)
    return float(np.sqrt(np.mean((A @ coef - F) ** 2)))


def test_fit_affine_examples():
    f = fit_affine(FunctionSpec(Affine(1, 2, -1)), W2)
    assert f.params == pytest.approx({"a": 1, "b": 2, "d": -1}, abs=1e-12) and f.rms < 1e-10
    e = fit_affine(expr_spec("exp(x)"), Window.square(1))
    oracle = _dense_plane_rms(expr_spec("exp(x)"), Window.square(1))
    assert oracle > 0.1 and e.rms > 0.1
    assert e.rms == pytest.approx(oracle, rel=0.1)
    z = fit_affine(FunctionSpec(Affine()), W2)
    assert z.params == {"a": 0, "b": 0, "d": 0} and z.rms == 0


def test_fit_exp_strip_examples():
    f = fit_exp_strip(expr_spec("1+(2+cos(y))*exp(2*x)"), W2)
    assert f.theta == pytest.approx(0, abs=1e-9)
    assert f.params["a"] == pytest.approx(1, abs=1e-6) and f.params["k"] == pytest.approx(2, abs=1e-6)
    assert f.rms < 1e-8
    ys, s = f.s_table
    assert np.all(np.diff(ys) > 0)
    assert np.max(np.abs(np.asarray(s) - (2 + np.cos(ys)))) < 1e-6
    g = fit_exp_strip(expr_spec("exp(x+0.5*y)"), W2)
    assert g.rms < 1e-8 and g.params["k"] == pytest.approx(1, abs=1e-6) and abs(g.params["a"]) < 1e-6
    ys, s = g.s_table
    assert np.max(np.abs(np.asarray(s) - np.exp(0.5 * np.asarray(ys)))) < 1e-6
    x = fit_exp_strip(expr_spec("x"), W2)
    assert x.rms > accept_threshold(x)


def test_fit_exp_affine_examples():
    f = fit_exp_affine(expr_spec("2+3*exp(1.5*x)-0.7*y"), W2)
    assert f.theta == pytest.approx(0, abs=1e-9) and f.rms < 1e-8
    assert f.params == pytest.approx({"a": 2, "b": 3, "k": 1.5, "d": -0.7}, abs=1e-6)
    n = fit_exp_affine(expr_spec("exp(x)+y"), W2)
    assert n.params == pytest.approx({"a": 0, "b": 1, "k": 1, "d": 1}, abs=1e-9) and n.rms < 1e-10
    spec = expr_spec("x^2+y^2")
    q = fit_exp_affine(spec, W2)
    # lower bound: on the fit square no g(u) + d v fits v^2 better than its spread about the mean
    square = fit_window(spec, W2)
    half = (square.xmax - square.xmin) / 2
    v = np.linspace(-half, half, 2001)
    assert q.rms > 0.1 and q.rms >= np.std(v ** 2) * 0.99


def test_best_family_examples():
    assert best_family(FunctionSpec(Affine(1, 2, -1)), W2).family == "affine"
    f = best_family(expr_spec("2+3*exp(1.5*x)-0.7*y"), W2)
    assert f.family == "expaffine"
    assert best_family(expr_spec("x^2+y^2"), W2) is None


def test_fit_serialization_round_trip():
    f = fit_exp_strip(expr_spec("1+(2+cos(y))*exp(2*x)"), W2)
    back = FamilyFit.from_dict(f.to_dict())
    assert back.to_dict() == f.to_dict()
    spec = back.to_spec()
    X, Y = fit_window(spec, W2).mesh(11, 11)
    assert np.max(np.abs(evaluate(spec, X, Y) - evaluate(expr_spec("1+(2+cos(y))*exp(2*x)"), X, Y))) < 1e-6


@pytest.mark.parametrize("text", ["sin(x)+y", "x^3", "(exp(x)+exp(-x))/2", "x*y"])
def test_no_false_fits(text):
    assert select_fit(all_fits(expr_spec(text), W2)) is None


def _log_uniform(rng):
    return float(np.exp(rng.uniform(math.log(0.1), math.log(10))) * rng.choice([-1.0, 1.0]))


def _rel(got, want):
    return abs(got - want) / abs(want)


@pytest.mark.slow
def test_parameter_recovery_affine():
    rng = np.random.default_rng(101)
    for _ in range(50):
        a, b, d = (_log_uniform(rng) for _ in range(3))
        f = fit_affine(FunctionSpec(Affine(a, b, d)), W2)
        assert max(_rel(f.params["a"], a), _rel(f.params["b"], b), _rel(f.params["d"], d)) < 1e-4
        assert f.rms < 1e-7


@pytest.mark.slow
def test_parameter_recovery_exp_affine():
    rng = np.random.default_rng(202)
    for _ in range(50):
        a, b, d, k = (_log_uniform(rng) for _ in range(4))
        f = fit_exp_affine(FunctionSpec(ExpAffine(a, b, d, k)), W2)
        p = f.params
        assert max(_rel(p["a"], a), _rel(p["b"], b), _rel(p["d"], d), _rel(p["k"], k)) < 1e-4, (a, b, d, k, p)
        assert f.rms < 1e-7


@pytest.mark.slow
def test_parameter_recovery_exp_strip():
    rng = np.random.default_rng(303)
    for _ in range(50):
        a, k, s0, beta = (_log_uniform(rng) for _ in range(4))
        curve = ExprCurve.parse(f"({s0!r})*(2+cos(({beta!r})*y))")
        f = fit_exp_strip(FunctionSpec(ExpStrip(a, k, curve)), W2)
        assert max(_rel(f.params["a"], a), _rel(f.params["k"], k)) < 1e-4, (a, k, f.params)
        ys, s = f.s_table
        want = curve(np.asarray(ys))
        assert np.max(np.abs(np.asarray(s) - want)) < 1e-4 * np.max(np.abs(want))
        assert f.rms < 1e-7


@pytest.mark.parametrize("delta", [0.3, 1.0, 2.2])
def test_rotation_equivariance(delta):
    for spec, fitter in ((FunctionSpec(ExpAffine(2, 3, -0.7, 1.5)), fit_exp_affine),
                         (expr_spec("1+(2+cos(y))*exp(2*x)"), fit_exp_strip)):
        f0 = fitter(spec, W2)
        f1 = fitter(rotate_about_z(spec, delta), W2)
        d = (f1.theta - f0.theta - delta) % math.pi
        assert min(d, math.pi - d) < 1e-6
        assert abs(f1.rms - f0.rms) < 1e-9


def test_exp_affine_with_zero_d_agrees_with_strip():
    spec = FunctionSpec(ExpAffine(0.5, 2.0, 0.0, 1.3))
    ea, es = fit_exp_affine(spec, W2), fit_exp_strip(spec, W2)
    assert abs(ea.params["a"] - es.params["a"]) < 1e-6
    assert abs(ea.params["k"] - es.params["k"]) < 1e-6
    assert abs(ea.params["d"]) < 1e-9
