"""Horizontal translation witnesses f(x + t) = c f(x) + a(1 - c) and the groups they generate."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import least_squares, minimize

from .errors import NormalizationImpossible
from .function_model import FunctionSpec, Window, evaluable, evaluate


@dataclass(frozen=True)
class TranslationWitness:
    t: tuple[float, float]
    a: float
    error: float       # rms residual over the probe grid
    rel_error: float   # error / (1 + rms of c f on the probe grid)


def _probe(window: Window, n: int):
    X, Y = window.mesh(n, n)
    return X.ravel(), Y.ravel()


def _differences(spec, c, px, py, fx, tx, ty):
    """D[i, j] = f(p_j + t_i) - c f(p_j); NaN where the shifted point is not evaluable."""
    qx = px[None, :] + np.asarray(tx)[:, None]
    qy = py[None, :] + np.asarray(ty)[:, None]
    inside = evaluable(spec, qx, qy)
    vals = np.full(qx.shape, np.nan)
    if inside.all():
        vals = evaluate(spec, qx, qy)
    elif inside.any():
        vals[inside] = evaluate(spec, qx[inside], qy[inside])
    with np.errstate(invalid="ignore", over="ignore"):
        return vals - c * fx[None, :]


def _error(D, offset: bool):
    """rms of D, after removing its mean when the offset a is free; inf if under half is usable."""
    good = np.isfinite(D)
    frac = good.mean(axis=-1)
    Dz = np.where(good, D, 0.0)
    n = np.maximum(good.sum(axis=-1), 1)
    with np.errstate(invalid="ignore", over="ignore"):
        if offset:
            mean = Dz.sum(axis=-1) / n
            Dz = np.where(good, D - mean[..., None], 0.0)
        err = np.sqrt((Dz * Dz).sum(axis=-1) / n)
    return np.where((frac >= 0.5) & np.isfinite(err), err, np.inf)


def find_translation_witness(spec: FunctionSpec, c: float, search_box=(-10.0, 10.0, -10.0, 10.0),
                             offset_search: bool = False, tol: float = 1e-6, window: Window | None = None,
                             coarse: int = 201, probe: int = 15, candidates: int = 6) -> TranslationWitness | None:
    """Search t (and a, if ``offset_search``) with f(x + t) = c f(x) + a(1 - c) on a probe grid.

    Coarse grid over ``search_box``, then Nelder-Mead and a least-squares polish from the
    best local minima.  Among candidates below ``tol`` (relative) the shortest t wins.
    """
    window = window or Window.square(2.0)
    offset = offset_search and c != 1.0
    px, py = _probe(window, probe)
    fx = np.asarray(evaluate(spec, px, py), dtype=float)
    norm = 1.0 + float(np.sqrt(np.mean((c * fx) ** 2)))
    # coarse scan on a thinner probe set
    cx, cy = _probe(window, 8)
    cf = np.asarray(evaluate(spec, cx, cy), dtype=float)
    gx = np.linspace(search_box[0], search_box[1], coarse)
    gy = np.linspace(search_box[2], search_box[3], coarse)
    TX, TY = np.meshgrid(gx, gy, indexing="ij")
    tx, ty = TX.ravel(), TY.ravel()
    E = np.empty(tx.size)
    step = max(1, 400_000 // cx.size)
    for s in range(0, tx.size, step):
        E[s:s + step] = _error(_differences(spec, c, cx, cy, cf, tx[s:s + step], ty[s:s + step]), offset)
    Eg = E.reshape(TX.shape)
    finite = np.isfinite(Eg)
    if not finite.any():
        return None
    filled = np.where(finite, Eg, np.inf)
    local = (filled == minimum_filter(filled, size=3, mode="nearest")) & finite
    idx = np.argwhere(local)
    order = np.argsort(filled[local])[:candidates]
    starts = [(gx[i], gy[j]) for i, j in idx[order]]

    def vec(t):
        D = _differences(spec, c, px, py, fx, [t[0]], [t[1]])[0]
        D = np.where(np.isfinite(D), D, 1e150)  # large but squarable
        return D - D.mean() if offset else D

    def err(t):
        return float(_error(_differences(spec, c, px, py, fx, [t[0]], [t[1]]), offset)[0])

    found = []
    for t0 in starts:
        with np.errstate(all="ignore"):
            t = np.array(t0)
            for _ in range(2):
                t = minimize(err, t, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16,
                                                                    "maxiter": 300, "initial_simplex":
                                                                    [t, t + [0.05, 0], t + [0, 0.05]]}).x
            try:
                ls = least_squares(vec, t, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
                if err(ls.x) <= err(t):
                    t = ls.x
            except (ValueError, np.linalg.LinAlgError):
                pass
        e = err(t)
        if np.isfinite(e):
            found.append((e, t))
    if not found:
        return None
    good = [(e, t) for e, t in found if e / norm < tol]
    if not good:
        return None
    e, t = min(good, key=lambda r: (round(float(np.hypot(*r[1])), 9), r[0]))
    a = 0.0
    if offset:
        D = _differences(spec, c, px, py, fx, [t[0]], [t[1]])[0]
        a = float(np.nanmean(D) / (1.0 - c))
    return TranslationWitness((float(t[0]), float(t[1])), a, float(e), float(e / norm))


# ---------------------------------------------------------------- multiplicativity

@dataclass(frozen=True)
class MultiplicativityCheck:
    residual: float
    positive: bool


def multiplicativity_residual(spec: FunctionSpec, t1, t2) -> MultiplicativityCheck:
    """|g(t1 + t2) - g(t1) g(t2)| for g = f / f(0, 0), with positivity of g(t1), g(t2)."""
    f0 = evaluate(spec, 0.0, 0.0)
    if f0 == 0.0:
        raise NormalizationImpossible("f(0, 0) = 0, cannot normalize to 1")
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    g1 = evaluate(spec, t1[0], t1[1]) / f0
    g2 = evaluate(spec, t2[0], t2[1]) / f0
    s = t1 + t2
    g12 = evaluate(spec, s[0], s[1]) / f0
    return MultiplicativityCheck(float(abs(g12 - g1 * g2)), bool(g1 > 0 and g2 > 0))


# ---------------------------------------------------------------- closed subgroups of R^2

@dataclass(frozen=True)
class TranslationGroupEstimate:
    """Closure of the group generated by ``generators``.

    ``closure`` is one of trivial, lattice1 {u, r}, line {u}, lattice2 {u1, u2},
    lineLattice {u, r}, plane.
    """

    generators: tuple
    closure: str
    params: dict = field(default_factory=dict)
    residual: float = 0.0

    def to_dict(self):
        return {"generators": [list(g) for g in self.generators], "closure": self.closure,
                "params": self.params, "residual": self.residual}


def _clean(x):
    return float(x) + 0.0  # drops negative zero


def _canonical(v):
    """Unit vector with first significant component positive."""
    v = _sign(np.asarray(v, dtype=float))
    v = v / np.linalg.norm(v)
    return [_clean(v[0]), _clean(v[1])]


def tolerance_gcd(values, eps: float) -> float:
    """Largest r (up to eps) with every value an integer multiple of r; ~eps if incommensurable."""
    vals = sorted((abs(float(v)) for v in values if abs(v) > eps), reverse=True)
    if not vals:
        return 0.0
    r = vals[0]
    for v in vals[1:]:
        a, b = max(r, v), min(r, v)
        while b > eps:
            a, b = b, math.fmod(a, b)
            # nearest-integer remainder keeps the cascade short
            if b > a / 2:
                b = a - b
        r = a
    return r


def _integer_basis(vectors):
    """Basis (rows) of the subgroup of Z^2 generated by integer ``vectors``."""
    rows = [list(map(int, v)) for v in vectors if any(v)]
    basis = []
    # Euclid on the first column, then on the remaining second entries
    col0 = [r for r in rows if r[0] != 0]
    rest = [r for r in rows if r[0] == 0]
    while len(col0) > 1:
        col0.sort(key=lambda r: abs(r[0]))
        p = col0[0]
        new = []
        for r in col0[1:]:
            q = r[0] // p[0]
            r2 = [r[0] - q * p[0], r[1] - q * p[1]]
            (new if r2[0] != 0 else rest).append(r2)
        col0 = [p] + new
    if col0:
        basis.append(col0[0])
    g = 0
    for r in rest:
        g = math.gcd(g, abs(r[1]))
    if g:
        basis.append([0, g])
    return basis


def classify_translation_group(generators, tol: float = 1e-6, max_coeff: int = 30) -> TranslationGroupEstimate:
    """Closure type of the subgroup of R^2 generated by ``generators`` (tolerance ``tol`` relative)."""
    gens = tuple(tuple(float(x) for x in g) for g in generators)
    G = np.array(gens, dtype=float).reshape(-1, 2)
    norms = np.linalg.norm(G, axis=1) if len(G) else np.zeros(0)
    scale = float(norms.max()) if norms.size else 0.0
    if scale == 0.0:
        return TranslationGroupEstimate(gens, "trivial")
    eps = tol * scale
    G = G[norms > eps]
    dets = [(abs(np.linalg.det(np.array([G[i], G[j]]))), i, j) for i, j in itertools.combinations(range(len(G)), 2)]
    best = max(dets, default=(0.0, 0, 0))
    if best[0] <= eps * scale:
        u = np.array(_canonical(G[int(np.argmax(np.linalg.norm(G, axis=1)))]))
        proj = G @ u
        r = tolerance_gcd(proj, eps)
        perp = float(np.max(np.abs(G @ np.array([-u[1], u[0]]))))
        if r < math.sqrt(tol) * scale:
            return TranslationGroupEstimate(gens, "line", {"u": [_clean(x) for x in u]}, max(r, perp))
        return TranslationGroupEstimate(gens, "lattice1", {"u": [_clean(x) for x in u], "r": float(r)}, perp)
    B = np.array([G[best[1]], G[best[2]]]).T          # columns are the basis vectors
    coords = np.linalg.solve(B, G.T).T                  # generators in basis coordinates
    # integer m with m . x in Z for every generator x (the dual of the closure)
    ms = np.array([m for m in itertools.product(range(-max_coeff, max_coeff + 1), repeat=2) if any(m)], dtype=float)
    phase = ms @ coords.T
    miss = np.abs(phase - np.round(phase))
    ok = np.all(miss <= tol * (1.0 + np.abs(ms).sum(axis=1))[:, None], axis=1)
    dual = _integer_basis(ms[ok].astype(int).tolist()) if ok.any() else []
    resid = float(np.max(miss[ok])) if ok.any() else 0.0
    if not dual:
        return TranslationGroupEstimate(gens, "plane", {}, resid)
    if len(dual) == 1:
        m0 = np.array(dual[0], dtype=float)
        n = np.linalg.solve(B.T, m0)                     # normal of the lines m0 . B^-1 w = k
        return TranslationGroupEstimate(gens, "lineLattice",
                                        {"u": _canonical([-n[1], n[0]]), "r": float(1.0 / np.linalg.norm(n))}, resid)
    M = np.array(dual, dtype=float)
    L = B @ np.linalg.inv(M)                             # columns: closure lattice basis
    u1, u2 = _gauss_reduce(L[:, 0], L[:, 1])
    return TranslationGroupEstimate(gens, "lattice2", {"u1": u1, "u2": u2}, resid)


def _sign(v):
    v = np.asarray(v, dtype=float)
    if v[0] < -1e-12 or (abs(v[0]) <= 1e-12 and v[1] < 0):
        v = -v
    return v


def _gauss_reduce(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a @ a > b @ b:
        a, b = b, a
    while True:
        mu = round(float(a @ b) / float(a @ a))
        b = b - mu * a
        if b @ b >= a @ a - 1e-12 * (a @ a):
            break
        a, b = b, a
    a, b = _sign(a), _sign(b)
    if a @ a > b @ b + 1e-12:
        a, b = b, a
    return [_clean(x) for x in a], [_clean(x) for x in b]
