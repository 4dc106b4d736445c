import json

import pytest

from conftest import expr_spec
from vrigid.errors import InvalidScale
from vrigid.function_model import Affine, FunctionSpec, Window
from vrigid.verdict import EXIT_CODES, RigidityReport, VerificationPlan, analyze, issue_verdict


def test_plan_validation():
    with pytest.raises(InvalidScale):
        VerificationPlan(c_list=(2.0, 0.0))
    with pytest.raises(InvalidScale):
        VerificationPlan(c_list=(float("inf"),))
    with pytest.raises(ValueError):
        VerificationPlan(c_list=())
    with pytest.raises(ValueError):
        VerificationPlan(isometry_class="rotations")


def test_exp_affine_certified():
    rep = issue_verdict(expr_spec("2+3*exp(1.5*x)-0.7*y"), VerificationPlan(c_list=(0.5, 2, 10)))
    assert rep.verdict_name == "RigidCertified" and rep.verdict["family"] == "expaffine"
    assert all(r["pass"] and r["residual_max"] < 1e-8 for r in rep.per_c)
    assert rep.exit_code == 0


def test_paraboloid_not_rigid():
    rep = issue_verdict(expr_spec("x^2+y^2"), VerificationPlan(c_list=(2,)))
    assert rep.verdict_name == "NotRigidEvidence" and rep.exit_code == 2
    assert rep.verdict["reasons"]


@pytest.mark.parametrize("c_list", [(0.5, 2, 10), (3.0,)])
def test_zero_certified_affine(c_list):
    rep = issue_verdict(FunctionSpec(Affine()), VerificationPlan(c_list=c_list))
    assert rep.verdict_name == "RigidCertified" and rep.verdict["family"] == "affine"
    assert all(r["residual_max"] == 0 for r in rep.per_c)


def test_case_b_relies_on_translations_note():
    an = analyze(expr_spec("cos(y)*exp(x)"))
    assert an.case.kind == "B"
    assert an.report.verdict_name == "RigidCertified"


def test_horizontal_translation_class_rejects_vertical_shifts():
    spec = expr_spec("1+(2+cos(y))*exp(2*x)")
    rep = issue_verdict(spec, VerificationPlan(c_list=(2.0,), isometry_class="horizontalTranslations",
                                               window=Window.square(2)))
    assert rep.verdict_name != "RigidCertified"
    rep = issue_verdict(expr_spec("(2+cos(y))*exp(2*x)"),
                        VerificationPlan(c_list=(2.0,), isometry_class="horizontalTranslations",
                                         window=Window.square(2)))
    assert rep.verdict_name == "RigidCertified"


def test_report_round_trip_and_exit_codes():
    rep = issue_verdict(expr_spec("exp(x)+y"), VerificationPlan(c_list=(2.0,)))
    text = rep.to_json()
    back = RigidityReport.from_json(text)
    assert back == rep and back.to_json() == text
    assert json.loads(text)["case"]["case"] == "A"
    for name, code in EXIT_CODES.items():
        data = rep.to_dict()
        data["verdict"] = {"verdict": name, "family": None, "reasons": []}
        assert RigidityReport.from_dict(data).exit_code == code


def test_report_is_deterministic():
    plan = VerificationPlan(c_list=(2.0,), seed=9)
    a = issue_verdict(expr_spec("sin(x)+y"), plan).to_json()
    b = issue_verdict(expr_spec("sin(x)+y"), plan).to_json()
    assert a == b
