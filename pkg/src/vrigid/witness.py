"""Witness isometries phi with phi(graph(f)) = graph(c f), and their numerical check."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageTooLow, DegenerateFamily, EvalError, InvalidScale, OutOfDomain
from .family_fit import FamilyFit
from .function_model import (ExpAffine, FunctionSpec, TransformChain, Window, evaluable, evaluate,
                             normalize_exp_affine)
from .sphere import Isometry3, rotation_x, rotation_y, rotation_z, w_coefficient

Z_REFLECTION = Isometry3(np.diag([1.0, 1.0, -1.0]), np.zeros(3), -1)


def _check_scale(c):
    if not c > 0 or not math.isfinite(c):
        raise InvalidScale(f"scale must be positive and finite, got {c}")


def _about_z(iso: Isometry3, theta: float) -> Isometry3:
    """R_z(theta) o iso o R_z(-theta)."""
    if theta == 0.0:
        return iso
    R = Isometry3(rotation_z(theta), np.zeros(3), 1)
    return R @ iso @ R.inverse()


# ---------------------------------------------------------------- family witnesses

def witness_exp_strip(fit: FamilyFit, c: float) -> Isometry3:
    """Translation by (-log(c)/k, 0, a(c-1)) in the fitted frame."""
    _check_scale(c)
    k = fit.params["k"]
    if k == 0:
        raise InvalidScale("k must be nonzero")
    a = fit.params["a"]
    return _about_z(Isometry3.translation((-math.log(c) / k, 0.0, a * (c - 1.0))), fit.theta)


def normal_form_witness(c: float) -> Isometry3:
    """For e^x + y: rotate about the x-axis by arctan(c) - pi/4, then shift x by log w_{c,1}."""
    _check_scale(c)
    R = Isometry3(rotation_x(math.atan(c) - math.pi / 4.0), np.zeros(3), 1)
    return Isometry3.translation((math.log(w_coefficient(c, 1.0)), 0.0, 0.0)) @ R


def _chain_witness(chain: TransformChain, level: int, c: float) -> Isometry3:
    """Witness for the function produced by the first ``level`` chain steps."""
    if level == 0:
        return normal_form_witness(c)
    step = chain.steps[level - 1]
    if step.kind == "shift_z":
        inner = _chain_witness(chain, level - 1, c)
        return (Isometry3.translation((0.0, 0.0, c * step.value)) @ inner
                @ Isometry3.translation((0.0, 0.0, -step.value)))
    if step.kind == "scale_z":
        m = step.value
        # graph(m g) -> graph(g) -> graph(c m g), via witnesses of g for |m| and c|m|
        core = _chain_witness(chain, level - 1, c * abs(m)) @ _chain_witness(chain, level - 1, abs(m)).inverse()
        return Z_REFLECTION @ core @ Z_REFLECTION if m < 0 else core
    # horizontal similarities and homotheties commute with z -> c z up to conjugation
    return _chain_witness(chain, level - 1, c).conjugate(step.matrix())


def _tidy(iso: Isometry3, tol: float = 1e-12) -> Isometry3:
    """Composite witnesses accumulate round-off; re-orthonormalize only past ``tol``."""
    err = np.max(np.abs(iso.Q.T @ iso.Q - np.eye(3)))
    return iso.repaired() if err > tol else iso


def witness_exp_affine(fit: FamilyFit, c: float) -> Isometry3:
    """Normal-form witness carried back through the normalization chain and fitted rotation."""
    _check_scale(c)
    p = fit.params
    spec = FunctionSpec(ExpAffine(p["a"], p["b"], p["d"], p["k"]), fit.theta)
    _, chain = normalize_exp_affine(spec)
    return _tidy(_chain_witness(chain, len(chain), c))


def witness_affine(fit: FamilyFit, c: float, pivot=None) -> Isometry3:
    """Tilt the plane about a horizontal line through the pivot point, then shift vertically.

    The pivot defaults to the centre of the fit window; it only affects where
    the witness moves points, not whether it is exact.
    """
    _check_scale(c)
    a, b, d = fit.params["a"], fit.params["b"], fit.params["d"]
    beta = math.hypot(b, d)
    if beta == 0.0:
        return Isometry3.translation((0.0, 0.0, a * (c - 1.0)))
    if pivot is None:
        w = fit.window
        pivot = (0.5 * (w[0] + w[1]), 0.5 * (w[2] + w[3])) if len(w) == 4 else (0.0, 0.0)
    px, py = float(pivot[0]), float(pivot[1])
    z0 = a + b * px + d * py
    phi = math.atan2(d, b)
    # in the frame where the gradient points along +x
    gamma = math.atan(c * beta) - math.atan(beta)
    P = np.array([math.cos(phi) * px + math.sin(phi) * py, -math.sin(phi) * px + math.cos(phi) * py, z0])
    tilt = Isometry3.translation(P) @ Isometry3(rotation_y(gamma), np.zeros(3), 1) @ Isometry3.translation(-P)
    local = Isometry3.translation((0.0, 0.0, (c - 1.0) * z0)) @ tilt
    return _about_z(local, phi)


def witness_for_fit(fit: FamilyFit, c: float, pivot=None) -> tuple[str, Isometry3]:
    """Family witness for ``fit``; degenerate exponential fits use the simpler family's witness."""
    scale = 1e-12 * (1.0 + fit.range)
    if fit.family == "affine":
        return "witnessAffine", witness_affine(fit, c, pivot)
    if fit.family == "expstrip":
        return "witnessExpStrip", witness_exp_strip(fit, c)
    p = fit.params
    if abs(p["d"]) <= scale:
        # a + b e^{kx} is an ExpStrip with constant s
        return "witnessExpStrip", witness_exp_strip(fit, c)
    if abs(p["b"]) <= scale:
        rot = fit.theta
        b_, d_ = -math.sin(rot) * p["d"], math.cos(rot) * p["d"]
        flat = FamilyFit("affine", 0.0, {"a": p["a"], "b": b_, "d": d_}, fit.rms, fit.window, range=fit.range)
        return "witnessAffine", witness_affine(flat, c, pivot)
    return "witnessExpAffine", witness_exp_affine(fit, c)


# ---------------------------------------------------------------- verification

@dataclass(frozen=True)
class WitnessCheck:
    residual_max: float
    residual_rms: float
    coverage: float
    scale: float  # max |f| on the window

    def passed(self, rel_tol: float = 1e-6, min_coverage: float = 0.5) -> bool:
        return self.coverage >= min_coverage and self.residual_max < rel_tol * (1.0 + self.scale)

    def to_dict(self):
        return {"residual_max": self.residual_max, "residual_rms": self.residual_rms,
                "coverage": self.coverage}


def _safe_evaluate(spec, x, y):
    """Evaluate, turning points that raise into NaN."""
    try:
        return np.asarray(evaluate(spec, x, y), dtype=float)
    except (EvalError, OutOfDomain):
        out = np.empty(len(x))
        for i, (xi, yi) in enumerate(zip(x, y)):
            try:
                out[i] = evaluate(spec, xi, yi)
            except (EvalError, OutOfDomain):
                out[i] = np.nan
        return out


def verify_witness(spec: FunctionSpec, c: float, iso: Isometry3, window: Window, grid=(101, 101),
                   min_coverage: float = 0.5) -> WitnessCheck:
    """Vertical residual |p'_z - c f(p'_x, p'_y)| over images p' of sampled graph points."""
    nx, ny = grid
    if nx < 2 or ny < 2:
        raise ValueError("grid must be at least 2x2")
    X, Y = window.mesh(nx, ny)
    x, y = X.ravel(), Y.ravel()
    z = _safe_evaluate(spec, x, y)
    ok = np.isfinite(z)
    P = iso(np.column_stack([x, y, z])[ok])
    mask = evaluable(spec, P[:, 0], P[:, 1]) & np.all(np.isfinite(P), axis=1)
    target = np.full(len(P), np.nan)
    if mask.any():
        target[mask] = c * _safe_evaluate(spec, P[mask, 0], P[mask, 1])
    with np.errstate(invalid="ignore"):
        resid = np.abs(P[:, 2] - target)
    good = np.isfinite(resid)
    coverage = float(good.sum()) / float(x.size)
    if coverage < min_coverage:
        raise CoverageTooLow(coverage, min_coverage)
    r = resid[good]
    scale = float(np.max(np.abs(z[ok]))) if ok.any() else 0.0
    return WitnessCheck(float(np.max(r)), float(np.sqrt(np.mean(r * r))), coverage, scale)


def compose_witnesses(phi_c: Isometry3, phi_c0: Isometry3) -> Isometry3:
    """phi_c o phi_c0^-1: maps graph(c0 f) to graph(c f), a witness for c/c0 on c0 f."""
    return phi_c @ phi_c0.inverse()


def translation_isometry(t, a: float, c: float) -> Isometry3:
    """Witness for f(x + t) = c f(x) + a(1 - c): move by (-t, a(c - 1))."""
    return Isometry3.translation((-float(t[0]), -float(t[1]), a * (c - 1.0)))


def in_isometry_class(iso: Isometry3, isometry_class: str, tol: float = 1e-12) -> bool:
    if isometry_class == "all":
        return True
    is_translation = np.allclose(iso.Q, np.eye(3), atol=tol)
    if isometry_class == "translations":
        return is_translation
    if isometry_class == "horizontalTranslations":
        return is_translation and abs(iso.t[2]) <= tol * (1.0 + np.max(np.abs(iso.t)))
    raise ValueError(f"unknown isometry class {isometry_class!r}")
