"""Least-squares fits of the three rigid families, each after an unknown z-rotation.

Exponential families are fitted by variable projection: for a fixed rotation
angle and rate k every other parameter enters linearly, so only (theta, k)
are searched numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import FitFailed
from .function_model import (Affine, ExpAffine, ExpStrip, FunctionSpec, TableCurve, Window,
                             domain_window, evaluate)

FAMILIES = ("affine", "expaffine", "expstrip")
# fewer free parameters first; used for tie-breaks
SIMPLICITY = {"affine": 0, "expaffine": 1, "expstrip": 2}
DEFAULT_THETAS = 180
TIE_RATIO = 1.10


@dataclass(frozen=True)
class FamilyFit:
    family: str
    theta: float
    params: dict
    rms: float
    window: tuple
    s_table: tuple | None = None  # ((y...), (s...)) for expstrip
    range: float = 0.0

    def __post_init__(self):
        if not self.rms >= 0:
            raise ValueError("rms must be non-negative")
        if self.family in ("expstrip", "expaffine") and self.params.get("k", 0.0) == 0.0:
            raise ValueError("exponential family fit needs k != 0")

    def to_spec(self) -> FunctionSpec:
        p = self.params
        if self.family == "affine":
            body = Affine(p["a"], p["b"], p["d"])
        elif self.family == "expaffine":
            body = ExpAffine(p["a"], p["b"], p["d"], p["k"])
        else:
            ys, vals = self.s_table
            body = ExpStrip(p["a"], p["k"], TableCurve(tuple(ys), tuple(vals)))
        return FunctionSpec(body, self.theta)

    def to_dict(self) -> dict:
        out = {"family": self.family, "theta": self.theta, "params": dict(self.params),
               "rms": self.rms, "range": self.range, "window": list(self.window)}
        if self.s_table is not None:
            out["s"] = {"y": list(self.s_table[0]), "s": list(self.s_table[1])}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FamilyFit":
        s = data.get("s")
        table = (tuple(s["y"]), tuple(s["s"])) if s is not None else None
        return cls(data["family"], data["theta"], dict(data["params"]), data["rms"],
                   tuple(data["window"]), table, data.get("range", 0.0))


# ---------------------------------------------------------------- sampling in a rotated frame

def fit_window(spec: FunctionSpec, window: Window) -> Window:
    """Window used for fitting: the square inscribed in the window's disc, so every
    rotated frame samples inside it; grids are also clipped to their hull."""
    dom = domain_window(spec)
    if dom is not None:
        xmin, xmax = max(window.xmin, dom.xmin), min(window.xmax, dom.xmax)
        ymin, ymax = max(window.ymin, dom.ymin), min(window.ymax, dom.ymax)
        window = Window(xmin, xmax, ymin, ymax, window.nx, window.ny)
    half = 0.5 * min(window.xmax - window.xmin, window.ymax - window.ymin) / math.sqrt(2.0)
    return Window.square(half, max(window.nx, window.ny), window.center)


class _Frame:
    """f sampled on a (u, v) lattice of the frame rotated by theta about the window centre.

    Coordinates are centred so u, v are symmetric about 0; the fitted parameters
    are translated back to the original origin afterwards.
    """

    def __init__(self, spec, square: Window, theta: float):
        n = square.nx
        half = 0.5 * (square.xmax - square.xmin)
        self.u = np.linspace(-half, half, n)
        self.v = np.linspace(-half, half, n)
        U, V = np.meshgrid(self.u, self.v)  # rows: v, columns: u
        c, s = math.cos(theta), math.sin(theta)
        cx, cy = square.center
        self.theta = theta
        self.center = (cx, cy)
        # original frame coordinates of the centre, expressed in the rotated frame
        self.u0 = c * cx + s * cy
        self.v0 = -s * cx + c * cy
        X = cx + c * U - s * V
        Y = cy + s * U + c * V
        self.F = np.asarray(evaluate(spec, X, Y), dtype=float)
        self.V = V


def _sample_rms_scale(F):
    return float(np.max(F) - np.min(F))


# ---------------------------------------------------------------- affine

def fit_affine(spec: FunctionSpec, window: Window) -> FamilyFit:
    X, Y = window.mesh()
    F = np.asarray(evaluate(spec, X, Y), dtype=float)
    if not np.all(np.isfinite(F)):
        raise FitFailed("non-finite samples")
    A = np.column_stack([np.ones(F.size), X.ravel(), Y.ravel()])
    coef, *_ = np.linalg.lstsq(A, F.ravel(), rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - F.ravel()) ** 2)))
    a, b, d = (float(v) for v in coef)
    return FamilyFit("affine", 0.0, {"a": a, "b": b, "d": d}, rms, tuple(window.as_list()),
                     range=_sample_rms_scale(F))


# ---------------------------------------------------------------- variable projection helpers

def _exp_column(k, u):
    """e^{k u} scaled to max 1 along the last axis (projections ignore the scale)."""
    e = np.multiply.outer(k, u)
    return np.exp(e - np.max(e, axis=-1, keepdims=True))


def _strip_solve(F, u, ks):
    """Best a + s_j e^{k u} (one s per row of F) for each k in ``ks``.

    Returns residual arrays (nk, nv, nu), a (nk,) and s (nk, nv) for the scaled column.
    """
    E = _exp_column(np.atleast_1d(ks), u)             # (nk, nu)
    ee = np.sum(E * E, axis=1)                         # (nk,)
    one = 1.0 - E * (E.sum(axis=1) / ee)[:, None]      # residual of 1 after projecting on E
    oo = np.sum(one * one, axis=1)
    R = F[None] - (F @ E.T).T[:, :, None] / ee[:, None, None] * E[:, None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(oo > 1e-300, np.einsum("kvu,ku->k", R, one) / (F.shape[0] * oo), 0.0)
    R = R - a[:, None, None] * one[:, None, :]
    s = ((F[None] - a[:, None, None]) * E[:, None, :]).sum(axis=2) / ee[:, None]
    return R, a, s


def _expaffine_solve(F, u, v, ks):
    """Best a + b e^{ku} + d v for each k.  On a product lattice the centred
    columns e^{ku} and v are orthogonal, so b and d decouple."""
    E = _exp_column(np.atleast_1d(ks), u)
    Em = E.mean(axis=1)
    Ec = E - Em[:, None]
    vc = v - v.mean()
    b = (Ec @ F.mean(axis=0)) / np.sum(Ec * Ec, axis=1)
    d = float(F.mean(axis=1) @ vc / (vc @ vc))
    a = F.mean() - b * Em - d * v.mean()
    R = F[None] - a[:, None, None] - b[:, None, None] * E[:, None, :] - d * v[None, :, None]
    return R, a, b, d


def _rms(R):
    return np.sqrt(np.mean(R * R, axis=(-2, -1)))


class _StripModel:
    name = "expstrip"

    @staticmethod
    def residual(fr, k):
        return _strip_solve(fr.F, fr.u, k)[0][0]

    @staticmethod
    def rms_many(fr, ks):
        return _rms(_strip_solve(fr.F, fr.u, ks)[0])


class _ExpAffineModel:
    name = "expaffine"

    @staticmethod
    def residual(fr, k):
        return _expaffine_solve(fr.F, fr.u, fr.v, k)[0][0]

    @staticmethod
    def rms_many(fr, ks):
        return _rms(_expaffine_solve(fr.F, fr.u, fr.v, ks)[0])


# |k| * halfwidth is kept in this range.  The lower bound matters: as k -> 0 with
# a -> infinity, a + s(y) e^{kx} approaches g(y) + b x for arbitrary g.
K_HALF_RANGE = (0.02, 50.0)


def _k_grid(half: float, per_sign: int = 40) -> np.ndarray:
    mags = np.geomspace(*K_HALF_RANGE, per_sign) / half
    return np.concatenate([-mags[::-1], mags])


def _k_bounds(k, half):
    lo, hi = K_HALF_RANGE[0] / half, K_HALF_RANGE[1] / half
    return (lo, hi) if k > 0 else (-hi, -lo)


def _polish(fun, x0, rms0, bounds):
    """Bounded trust-region least-squares polish; keeps x0 if not better."""
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    x0 = np.clip(x0, lo, hi)
    try:
        with np.errstate(all="ignore"):
            res = least_squares(fun, x0, bounds=(lo, hi), method="trf", xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=200)
    except (ValueError, np.linalg.LinAlgError):
        return x0, rms0
    if not np.all(np.isfinite(res.x)) or not np.all(np.isfinite(res.fun)):
        return x0, rms0
    rms = float(np.sqrt(np.mean(res.fun ** 2)))
    return (res.x, rms) if rms < rms0 else (x0, rms0)


def _best_k(model, fr, ks, half):
    """(k, rms): log-grid scan, bounded refinement, then least-squares polish."""
    with np.errstate(all="ignore"):
        vals = model.rms_many(fr, ks)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return None, np.inf
    k0 = ks[i]
    kb = _k_bounds(k0, half)
    lo = ks[i - 1] if i > 0 and ks[i - 1] * k0 > 0 else kb[0]
    hi = ks[i + 1] if i + 1 < len(ks) and ks[i + 1] * k0 > 0 else kb[1]

    def rms_at(k):
        with np.errstate(all="ignore"):
            r = float(model.rms_many(fr, k)[0])
        return r if np.isfinite(r) else np.inf

    res = minimize_scalar(rms_at, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14, "maxiter": 500})
    k, rms = (float(res.x), float(res.fun)) if res.fun <= vals[i] else (float(k0), float(vals[i]))
    x, rms = _polish(lambda p: model.residual(fr, p[0]).ravel(), np.array([k]), rms, ([kb[0]], [kb[1]]))
    return float(x[0]), rms


# ---------------------------------------------------------------- exponential families

def _theta_grid(thetas):
    if thetas is None:
        return math.pi * np.arange(DEFAULT_THETAS) / DEFAULT_THETAS
    thetas = np.asarray(thetas, dtype=float).ravel()
    if thetas.size == 0:
        raise ValueError("theta grid must be nonempty")
    return thetas


def _fit_exponential(model, spec: FunctionSpec, window: Window, thetas):
    """Search theta (grid, bounded refinement, joint LM polish with k); returns (frame, k, rms, scale)."""
    sq = fit_window(spec, window)
    half = 0.5 * (sq.xmax - sq.xmin)
    ks = _k_grid(half)
    grid = _theta_grid(thetas)

    def objective(th):
        fr = _Frame(spec, sq, float(th))
        if not np.all(np.isfinite(fr.F)):
            return np.inf, None, fr
        k, rms = _best_k(model, fr, ks, half)
        return rms, k, fr

    results = [objective(th) + (float(th),) for th in grid]
    results = [r for r in results if r[1] is not None and np.isfinite(r[0])]
    if not results:
        raise FitFailed("no rotation angle gave finite parameters")
    scale = _sample_rms_scale(results[0][2].F)
    best = min(r[0] for r in results)
    tie = best + 1e-10 * scale
    rms, k, fr, th = min((r for r in results if r[0] <= tie), key=lambda r: r[3])
    exact = 1e-13 * (1.0 + scale)
    if rms > exact and len(grid) > 1:
        step = float(np.min(np.diff(np.sort(grid))))
        res = minimize_scalar(lambda t: objective(t)[0], bounds=(th - step, th + step), method="bounded",
                              options={"xatol": 1e-12, "maxiter": 200})
        if np.isfinite(res.fun) and res.fun < rms:
            rms, k, fr = objective(float(res.x))
            th = float(res.x)
    if rms > exact:
        kb = _k_bounds(k, half)
        x, rms2 = _polish(lambda p: model.residual(_Frame(spec, sq, p[0]), p[1]).ravel(), np.array([th, k]), rms,
                          ([th - 0.1, kb[0]], [th + 0.1, kb[1]]))
        if rms2 < rms:
            th, k = float(x[0]), float(x[1])
            fr = _Frame(spec, sq, th)
            rms = float(_rms(model.residual(fr, k)))
    return fr, float(k), float(rms), scale


def fit_exp_strip(spec: FunctionSpec, window: Window, thetas=None) -> FamilyFit:
    """a + s(y) e^{kx} in a rotated frame; s is returned as a table on the frame's v-lattice."""
    fr, k, rms, scale = _fit_exponential(_StripModel, spec, window, thetas)
    R, a, s = _strip_solve(fr.F, fr.u, k)
    rms = float(_rms(R[0]))
    # undo the column scaling, then move the origin back: e^{k(u - u0)}
    s_orig = s[0] * math.exp(-np.max(k * fr.u) - k * fr.u0)
    ys = tuple(float(v) for v in fr.v + fr.v0)
    return FamilyFit("expstrip", fr.theta, {"a": float(a[0]), "k": k}, rms, tuple(window.as_list()),
                     (ys, tuple(float(v) for v in s_orig)), range=scale)


def fit_exp_affine(spec: FunctionSpec, window: Window, thetas=None) -> FamilyFit:
    """a + b e^{kx} + d y in a rotated frame."""
    fr, k, rms, scale = _fit_exponential(_ExpAffineModel, spec, window, thetas)
    R, a, b, d = _expaffine_solve(fr.F, fr.u, fr.v, k)
    rms = float(_rms(R[0]))
    b_orig = float(b[0]) * math.exp(-np.max(k * fr.u) - k * fr.u0)
    a_orig = float(a[0]) - d * fr.v0
    return FamilyFit("expaffine", fr.theta, {"a": a_orig, "b": b_orig, "d": d, "k": k}, rms,
                     tuple(window.as_list()), range=scale)


# ---------------------------------------------------------------- selection

def accept_threshold(fit: FamilyFit, rel: float = 1e-6) -> float:
    return rel * fit.range + 1e-14 * (1.0 + fit.range)


def best_family(spec: FunctionSpec, window: Window, thetas=None, rel: float = 1e-6) -> FamilyFit | None:
    """Lowest-rms accepted fit; near-ties go to the family with fewer parameters."""
    fits = all_fits(spec, window, thetas)
    return select_fit(fits, rel)


def all_fits(spec: FunctionSpec, window: Window, thetas=None) -> dict:
    out = {}
    for name, fn in (("affine", lambda: fit_affine(spec, fit_window(spec, window) if domain_window(spec) else window)),
                     ("expaffine", lambda: fit_exp_affine(spec, window, thetas)),
                     ("expstrip", lambda: fit_exp_strip(spec, window, thetas))):
        try:
            out[name] = fn()
        except FitFailed:
            out[name] = None
    return out


def select_fit(fits: dict, rel: float = 1e-6) -> FamilyFit | None:
    accepted = [f for f in fits.values() if f is not None and f.rms <= accept_threshold(f, rel)]
    if not accepted:
        return None
    # compare on rms relative to each fit's own sample range, floored at round-off
    rel_rms = lambda f: max(f.rms / f.range if f.range > 0 else 0.0, 1e-12)  # noqa: E731
    best = min(rel_rms(f) for f in accepted)
    near = [f for f in accepted if rel_rms(f) <= TIE_RATIO * best]
    return min(near, key=lambda f: SIMPLICITY[f.family])
