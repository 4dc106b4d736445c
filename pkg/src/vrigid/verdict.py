"""End-to-end rigidity analysis: profile, classification, fits, per-scale witnesses, verdict."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .classifier import ClassifierTolerances, RigidityCase, classify_case, detect_affine_direction
from .direction_set import (DirectionSample, H3Profile, PropertyReport, Tolerances, audit_strip_properties,
                            estimate_h3_profile, sample_direction_set)
from .errors import InvalidScale, VRigidError
from .family_fit import FamilyFit, accept_threshold, all_fits, select_fit
from .function_model import FunctionSpec, Window, default_ladder, domain_window
from .sphere import Isometry3, chord_to_angle, psi
from .translations import find_translation_witness
from .witness import in_isometry_class, translation_isometry, verify_witness, witness_for_fit

ISOMETRY_CLASSES = ("all", "translations", "horizontalTranslations")
EXIT_CODES = {"RigidCertified": 0, "NotRigidEvidence": 2, "Unknown": 3}


@dataclass(frozen=True)
class VerificationPlan:
    c_list: tuple = (0.5, 2.0, 10.0)
    isometry_class: str = "all"
    window: Window | None = None
    residual_tol: float = 1e-6
    ladder_rungs: int = 3
    nbins: int = 360
    npairs: int = 1000
    seed: int = 0
    search_box: tuple = (-10.0, 10.0, -10.0, 10.0)
    min_coverage: float = 0.5
    verify_grid: tuple = (101, 101)
    tolerances: Tolerances = Tolerances()
    classifier: ClassifierTolerances = ClassifierTolerances()

    def __post_init__(self):
        c_list = tuple(float(c) for c in self.c_list)
        if not c_list:
            raise ValueError("c_list must be nonempty")
        if any(not (c > 0 and math.isfinite(c)) for c in c_list):
            raise InvalidScale("every c must be positive and finite")
        if self.isometry_class not in ISOMETRY_CLASSES:
            raise ValueError(f"isometry class must be one of {ISOMETRY_CLASSES}")
        object.__setattr__(self, "c_list", c_list)

    def resolved_window(self, spec: FunctionSpec) -> Window:
        if self.window is not None:
            return self.window
        return domain_window(spec) or Window.square(3.0)


# ---------------------------------------------------------------- report

def _plain(value):
    """JSON-compatible copy: tuples to lists, numpy scalars to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v + 0.0 if math.isfinite(v) else None
    return value


@dataclass
class RigidityReport:
    input: dict
    profile: dict
    audit: dict
    case: dict
    fit: dict | None
    fits: dict
    per_c: list
    verdict: dict
    notes: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("input", "profile", "audit", "case", "fit", "fits", "per_c", "verdict", "notes"):
            setattr(self, name, _plain(getattr(self, name)))

    @property
    def verdict_name(self) -> str:
        return self.verdict["verdict"]

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict_name]

    def to_dict(self) -> dict:
        return {"input": self.input, "profile": self.profile, "audit": self.audit, "case": self.case,
                "fit": self.fit, "fits": self.fits, "per_c": self.per_c, "verdict": self.verdict,
                "notes": self.notes}

    @classmethod
    def from_dict(cls, data: dict) -> "RigidityReport":
        return cls(**{k: data[k] for k in ("input", "profile", "audit", "case", "fit", "fits", "per_c",
                                           "verdict")}, notes=data.get("notes", []))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RigidityReport":
        return cls.from_dict(json.loads(text))


@dataclass
class Analysis:
    report: RigidityReport
    profile: H3Profile
    sample: DirectionSample
    audit: PropertyReport
    case: RigidityCase
    fit: FamilyFit | None
    witnesses: dict  # c -> Isometry3 for passing records


# ---------------------------------------------------------------- strip transport

def strip_transport_check(sample: DirectionSample, c: float, Q: Isometry3) -> float:
    """Symmetric angular Hausdorff distance between psi_c(sample) and Q(sample)."""
    Q.check()
    if np.any(Q.t != 0.0):
        raise ValueError("strip transport needs a purely orthogonal map (zero translation)")
    dirs = sample.directions
    A = psi(c, dirs)
    B = dirs @ Q.Q.T
    da, _ = cKDTree(B).query(A)
    db, _ = cKDTree(A).query(B)
    return float(chord_to_angle(max(np.max(da), np.max(db))))


# ---------------------------------------------------------------- pipeline

def _verify_record(spec, c, method, iso, plan, window):
    rec = {"c": c, "method": method, "isometry": iso.to_list(), "residual_max": None,
           "residual_rms": None, "coverage": None, "pass": False}
    try:
        chk = verify_witness(spec, c, iso, window, plan.verify_grid, plan.min_coverage)
    except VRigidError as exc:
        rec["error"] = str(exc)
        return rec
    rec.update(chk.to_dict())
    ok = chk.passed(plan.residual_tol, plan.min_coverage)
    if ok and not in_isometry_class(iso, plan.isometry_class):
        rec["error"] = f"witness is outside the isometry class {plan.isometry_class}"
        ok = False
    rec["pass"] = bool(ok)
    return rec


def _per_c(spec, c, fit, plan, window):
    attempts = []
    if fit is not None:
        try:
            method, iso = witness_for_fit(fit, c, pivot=window.center)
            attempts.append(_verify_record(spec, c, method, iso, plan, window))
        except VRigidError as exc:
            attempts.append({"c": c, "method": "witness", "isometry": None, "residual_max": None,
                             "residual_rms": None, "coverage": None, "pass": False, "error": str(exc)})
        if attempts[-1]["pass"]:
            return attempts[-1], iso, False
    offset = plan.isometry_class != "horizontalTranslations"
    try:
        tw = find_translation_witness(spec, c, plan.search_box, offset_search=offset, tol=plan.residual_tol,
                                      window=window)
    except VRigidError as exc:
        tw = None
        err = str(exc)
    else:
        err = "no translation witness below tolerance"
    if tw is None:
        rec = attempts[-1] if attempts else {"c": c, "method": "translationSearch", "isometry": None,
                                             "residual_max": None, "residual_rms": None, "coverage": None,
                                             "pass": False}
        rec = dict(rec)
        rec["translation_search"] = err
        return rec, None, True
    iso = translation_isometry(tw.t, tw.a, c)
    rec = _verify_record(spec, c, "translationSearch", iso, plan, window)
    rec["translation"] = {"t": list(tw.t), "a": tw.a, "rel_error": tw.rel_error}
    return rec, (iso if rec["pass"] else None), not rec["pass"]


def analyze(spec: FunctionSpec, plan: VerificationPlan = VerificationPlan()) -> Analysis:
    """Run the whole pipeline; analysis failures end up in the report, never as exceptions."""
    window = plan.resolved_window(spec)
    ladder = default_ladder(window, plan.ladder_rungs)
    notes = [f"finite-scale certificate: only c in {list(plan.c_list)} were checked"]
    sample = sample_direction_set(spec, window, plan.npairs, plan.seed)
    profile = estimate_h3_profile(spec, ladder, plan.nbins, seed=plan.seed)
    audit = audit_strip_properties(sample, profile, plan.tolerances)
    affine = detect_affine_direction(spec, window, seed=plan.seed)
    case = classify_case(profile, affine, plan.classifier)

    fits = all_fits(spec, window)
    fit = select_fit(fits, plan.residual_tol)
    fit_summary = {name: (None if f is None else {"rms": f.rms, "theta": f.theta, "params": f.params,
                                                  "accepted": bool(f.rms <= accept_threshold(f, plan.residual_tol))})
                   for name, f in fits.items()}
    accepted = [n for n, f in fit_summary.items() if f is not None and f["accepted"]]
    if len(accepted) > 1:
        notes.append(f"several families fit ({', '.join(accepted)}); chose {fit.family} "
                     "(lowest relative rms, fewer parameters on 10% ties)")

    per_c, witnesses, searches_failed = [], {}, []
    for c in plan.c_list:
        rec, iso, search_failed = _per_c(spec, c, fit, plan, window)
        per_c.append(rec)
        searches_failed.append(search_failed)
        if iso is not None:
            witnesses[c] = iso

    all_pass = all(r["pass"] for r in per_c)
    reasons = []
    if fit is not None and all_pass:
        verdict = {"verdict": "RigidCertified", "family": fit.family, "reasons": []}
    else:
        if fit is None:
            reasons.append("no rigid family fits within tolerance")
        failed = [r["c"] for r in per_c if not r["pass"]]
        if failed:
            reasons.append(f"no passing witness for c in {failed}")
        pattern_excluded = case.kind in ("indeterminate", "A")
        if case.kind == "indeterminate":
            reasons.append(f"strip pattern matches none of Cases A-D ({case.params.get('reason', '')})")
        elif case.kind == "A":
            reasons.append("Case A reduces f to g(x) + d y along the detected azimuth, and no rigid g fits")
        if fit is None and all(searches_failed) and pattern_excluded:
            verdict = {"verdict": "NotRigidEvidence", "family": None, "reasons": reasons}
        else:
            if fit is None and all_pass:
                reasons.append("translation witnesses pass for every c but no family fit was found")
            verdict = {"verdict": "Unknown", "family": None, "reasons": reasons}
    if case.kind == "B" and fit is None:
        notes.append("Case B: only translation witnesses were searched; rotations about vertical axes were not")

    report = RigidityReport(
        input={"function": spec.describe(), "window": window.as_list(), "c_list": list(plan.c_list),
               "isometry_class": plan.isometry_class, "seed": plan.seed, "nbins": plan.nbins,
               "npairs": plan.npairs, "ladder_rungs": plan.ladder_rungs, "residual_tol": plan.residual_tol},
        profile=profile.summary(),
        audit=audit.to_dict(),
        case=case.to_dict(),
        fit=None if fit is None else fit.to_dict(),
        fits=fit_summary,
        per_c=per_c,
        verdict=verdict,
        notes=notes,
    )
    return Analysis(report, profile, sample, audit, case, fit, witnesses)


def issue_verdict(spec: FunctionSpec, plan: VerificationPlan = VerificationPlan()) -> RigidityReport:
    return analyze(spec, plan).report
