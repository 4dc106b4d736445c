"""Sampling the chord-direction set S_f and its top boundary profile h3.

S_f is the set of unit directions (p - q)/|p - q| over distinct points p, q of
graph(f).  Over each azimuth the vertical half great circle meets S_f in an
arc; ``top`` is the z-coordinate of its upper end, estimated from the largest
slope of f along that azimuth, and ``bottom(theta) = -top(theta + pi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .function_model import FunctionSpec, Window, evaluate
from .sphere import chord_to_angle, directions_of_chords, height_slope_map, slope_height_map

DEFAULT_NBINS = 360
DEFAULT_GROWTH = 4.0


@dataclass(frozen=True)
class Tolerances:
    eps_pole: float = 1e-6
    tau_lsc: float = 0.05
    tau_cvx: float = 0.02
    tau_sym: float = 1e-9


@dataclass(frozen=True, eq=False)
class DirectionSample:
    """Chord directions with the endpoints that produced them.

    Row ``i`` and row ``i + n`` are the two orders of the same pair.
    """

    directions: np.ndarray
    p: np.ndarray
    q: np.ndarray
    seed: int
    window: Window

    def __len__(self):
        return len(self.directions)


@dataclass(frozen=True, eq=False)
class H3Profile:
    thetas: np.ndarray
    top: np.ndarray
    bottom: np.ndarray
    top_saturated: np.ndarray
    bottom_saturated: np.ndarray
    max_slope: np.ndarray = field(default=None)  # (rungs, bins) per-rung sup of slopes
    ladder: tuple = ()
    growth_factor: float = DEFAULT_GROWTH

    @property
    def nbins(self) -> int:
        return len(self.thetas)

    @property
    def bin_width(self) -> float:
        return 2.0 * math.pi / self.nbins

    def antipodal_index(self) -> np.ndarray:
        n = self.nbins
        return (np.arange(n) + n // 2) % n

    def top_slopes(self) -> np.ndarray:
        return height_slope_map(self.top)

    def rotated(self, delta: float) -> "H3Profile":
        """Same profile with every azimuth label advanced by ``delta``."""
        return replace(self, thetas=np.mod(self.thetas + delta, 2.0 * math.pi))

    def with_top(self, top, top_saturated=None) -> "H3Profile":
        """Profile rebuilt from new top values, keeping bottom = -top(theta + pi)."""
        return profile_from_top(self.thetas, top,
                                self.top_saturated if top_saturated is None else top_saturated,
                                max_slope=self.max_slope, ladder=self.ladder,
                                growth_factor=self.growth_factor)

    def csv_rows(self):
        for th, t, b, ts, bs in zip(self.thetas, self.top, self.bottom, self.top_saturated, self.bottom_saturated):
            yield (float(th), float(t), float(b), bool(ts), bool(bs))

    def summary(self) -> dict:
        return {
            "nbins": self.nbins,
            "top_min": float(np.min(self.top)),
            "top_max": float(np.max(self.top)),
            "n_top_saturated": int(np.sum(self.top_saturated)),
            "n_zero_bins": int(np.sum((np.abs(self.top) <= 0.02) & ~self.top_saturated)),
            "ladder": [w.as_list() for w in self.ladder],
            "growth_factor": self.growth_factor,
        }


def profile_from_top(thetas, top, top_saturated, *, max_slope=None, ladder=(), growth_factor=DEFAULT_GROWTH):
    """Build an H3Profile from top values; bins must be evenly spaced with an even count."""
    thetas = np.asarray(thetas, dtype=float)
    top = np.asarray(top, dtype=float)
    sat = np.asarray(top_saturated, dtype=bool)
    n = len(thetas)
    if n < 8 or n % 2:
        raise ValueError("profile needs an even number of bins, at least 8")
    anti = (np.arange(n) + n // 2) % n
    return H3Profile(thetas, top, -top[anti], sat, sat[anti].copy(), max_slope, tuple(ladder), growth_factor)


def check_profile(profile: H3Profile, tol: float = 1e-9) -> list[str]:
    """Invariant violations of a profile (empty list when consistent)."""
    problems = []
    anti = profile.antipodal_index()
    if np.any(np.abs(profile.bottom + profile.top[anti]) > tol):
        problems.append("bottom(theta) != -top(theta + pi)")
    if np.any(profile.bottom_saturated != profile.top_saturated[anti]):
        problems.append("bottom saturation flags are not the antipodal top flags")
    if np.any(profile.top < profile.bottom - tol):
        problems.append("top below bottom")
    if np.any(profile.top <= -1.0):
        problems.append("top reaches the south pole")
    if np.any(np.abs(profile.top) > 1.0) or np.any(~np.isfinite(profile.top)):
        problems.append("top outside [-1, 1]")
    return problems


# ---------------------------------------------------------------- sampling

def _stratified(rng, window: Window, m: int, n: int) -> np.ndarray:
    """n points, cycling through an m x m cell partition with uniform jitter."""
    cells = rng.permutation(np.resize(np.arange(m * m), n))
    ci, cj = np.divmod(cells, m)
    hx = (window.xmax - window.xmin) / m
    hy = (window.ymax - window.ymin) / m
    x = window.xmin + (cj + rng.random(n)) * hx
    y = window.ymin + (ci + rng.random(n)) * hy
    return np.column_stack([x, y])


def sample_direction_set(spec: FunctionSpec, window: Window, npairs: int, seed: int = 0) -> DirectionSample:
    """Directions of ``npairs`` random chords of graph(f) over ``window``, both orders."""
    if npairs < 1:
        raise ValueError("npairs must be >= 1")
    rng = np.random.default_rng(seed)
    m = max(1, int(math.ceil(math.sqrt(npairs))))
    a = _stratified(rng, window, m, npairs)
    b = _stratified(rng, window, m, npairs)
    same = np.all(a == b, axis=1)
    while np.any(same):
        b[same] = _stratified(rng, window, m, int(same.sum()))
        same = np.all(a == b, axis=1)
    za = evaluate(spec, a[:, 0], a[:, 1])
    zb = evaluate(spec, b[:, 0], b[:, 1])
    p = np.column_stack([a, za])
    q = np.column_stack([b, zb])
    P = np.vstack([p, q])
    Q = np.vstack([q, p])
    return DirectionSample(directions_of_chords(P, Q), P, Q, seed, window)


def _base_points(window: Window, segments: int, rng, margin: float) -> np.ndarray:
    """Stratified interior points plus edge, corner and diagonal points of the eroded window."""
    inner = Window(window.xmin + margin, window.xmax - margin, window.ymin + margin, window.ymax - margin)
    m = max(2, int(round(math.sqrt(segments))))
    pts = [_stratified(rng, inner, m, m * m)]
    t = np.linspace(0.0, 1.0, m + 1)
    xs = inner.xmin + t * (inner.xmax - inner.xmin)
    ys = inner.ymin + t * (inner.ymax - inner.ymin)
    pts.append(np.column_stack([xs, np.full_like(xs, inner.ymin)]))
    pts.append(np.column_stack([xs, np.full_like(xs, inner.ymax)]))
    pts.append(np.column_stack([np.full_like(ys, inner.xmin), ys]))
    pts.append(np.column_stack([np.full_like(ys, inner.xmax), ys]))
    pts.append(np.column_stack([xs, ys]))
    pts.append(np.column_stack([xs, ys[::-1]]))
    return np.vstack(pts)


def _max_slopes(spec: FunctionSpec, thetas: np.ndarray, points: np.ndarray, h: float) -> np.ndarray:
    """Per azimuth, the largest central-difference slope over the shared base points."""
    u = np.column_stack([np.cos(thetas), np.sin(thetas)])
    out = np.empty(len(thetas))
    chunk = max(1, 400_000 // max(1, len(points)))
    for s in range(0, len(thetas), chunk):
        uu = u[s:s + chunk, None, :] * h
        fp = evaluate(spec, points[None, :, 0] + uu[..., 0], points[None, :, 1] + uu[..., 1])
        fm = evaluate(spec, points[None, :, 0] - uu[..., 0], points[None, :, 1] - uu[..., 1])
        with np.errstate(invalid="ignore", over="ignore"):
            slopes = (fp - fm) / (2.0 * h)
        slopes = np.where(np.isnan(slopes), -np.inf, slopes)
        out[s:s + chunk] = np.max(slopes, axis=1)
    return out


def estimate_h3_profile(spec: FunctionSpec, ladder, nbins: int = DEFAULT_NBINS, segments: int = 576,
                        seed: int = 0, growth_factor: float = DEFAULT_GROWTH) -> H3Profile:
    """Estimate h3 per azimuth bin over a ladder of nested windows.

    Bin ``i`` sits at azimuth 2*pi*i/nbins.  The top of a bin is the slope-height
    of the largest slope on the last rung, or 1 when that slope kept growing
    across the ladder: last - first >= growth_factor * |first|, with increments
    between consecutive rungs that never shrink.
    """
    ladder = list(ladder)
    if not ladder:
        raise ValueError("ladder must contain at least one window")
    if nbins < 8 or nbins % 2:
        raise ValueError("nbins must be even and >= 8")
    thetas = 2.0 * math.pi * np.arange(nbins) / nbins
    rng = np.random.default_rng(seed)
    slopes = []
    for w in ladder:
        h = 1e-4 * w.size
        pts = _base_points(w, segments, rng, margin=h)
        slopes.append(_max_slopes(spec, thetas, pts, h))
    slopes = np.array(slopes)
    first, last = slopes[0], slopes[-1]
    saturated = np.zeros(nbins, dtype=bool)
    if len(ladder) > 1:
        with np.errstate(invalid="ignore"):
            floor = 1e-8 * (1.0 + np.max(np.abs(first[np.isfinite(first)]), initial=0.0))
            saturated = (last > floor) & (last - first >= growth_factor * np.maximum(np.abs(first), floor))
            # exponential growth: increments between consecutive rungs do not shrink
            steps = np.diff(slopes, axis=0)
            for k in range(1, len(steps)):
                saturated &= steps[k] >= steps[k - 1] * (1.0 - 1e-6)
    saturated |= np.isposinf(last)
    top = np.where(saturated, 1.0, slope_height_map(np.where(np.isfinite(last), last, 0.0)))
    return profile_from_top(thetas, top, saturated, max_slope=slopes, ladder=ladder, growth_factor=growth_factor)


def jordan_curve(spec: FunctionSpec, r: float, nsamples: int) -> np.ndarray:
    """gamma(x) = ((x, f(x)) - (-x, f(-x))) / |...| on the circle of radius r."""
    if not r > 0:
        raise ValueError("radius must be positive")
    phi = 2.0 * math.pi * np.arange(nsamples) / nsamples
    x = r * np.cos(phi)
    y = r * np.sin(phi)
    p = np.column_stack([x, y, evaluate(spec, x, y)])
    q = np.column_stack([-x, -y, evaluate(spec, -x, -y)])
    return directions_of_chords(p, q)


# ---------------------------------------------------------------- audits

@dataclass
class Check:
    passed: bool
    violations: list = field(default_factory=list)
    detail: str = ""

    def to_dict(self):
        return {"passed": self.passed, "violations": self.violations[:50],
                "n_violations": len(self.violations), "detail": self.detail}


@dataclass
class PropertyReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_dict(self):
        return {"passed": self.passed, "checks": {k: c.to_dict() for k, c in self.checks.items()}}


def _symmetry(sample: DirectionSample, tol: float) -> Check:
    tree = cKDTree(sample.directions)
    dist, _ = tree.query(-sample.directions)
    ang = chord_to_angle(dist)
    bad = np.nonzero(ang > tol)[0]
    return Check(bad.size == 0, [int(i) for i in bad], f"max antipode gap {float(np.max(ang, initial=0.0)):.3e} rad")


def _poles(sample: DirectionSample, eps: float) -> Check:
    # angular distance to the nearer pole, from the horizontal part (no cancellation near |z| = 1)
    horiz = np.hypot(sample.directions[:, 0], sample.directions[:, 1])
    pole_angle = np.arcsin(np.clip(horiz, 0.0, 1.0))
    bad = np.nonzero(pole_angle <= eps)[0]
    return Check(bad.size == 0, [int(i) for i in bad],
                 f"max |z| {float(np.max(np.abs(sample.directions[:, 2]), initial=0.0)):.12f}, "
                 f"min polar gap {float(np.min(pole_angle, initial=np.pi)):.3e} rad")


def _nonempty(profile: H3Profile) -> Check:
    ok = np.isfinite(profile.top) & np.isfinite(profile.bottom) & (profile.top >= profile.bottom - 1e-12) \
        & (profile.top > -1.0)
    bad = np.nonzero(~ok)[0]
    return Check(bad.size == 0, [int(i) for i in bad])


def _lsc(profile: H3Profile, tau: float) -> Check:
    top = profile.top
    nb = np.maximum(np.roll(top, 1), np.roll(top, -1))
    bad = np.nonzero((top > nb + tau) & ~profile.top_saturated)[0]
    return Check(bad.size == 0, [int(i) for i in bad])


def _convexity(profile: H3Profile, tau: float) -> Check:
    n = profile.nbins
    th = profile.thetas
    m = profile.top_slopes()
    finite = ~profile.top_saturated & np.isfinite(m)
    dth = profile.bin_width
    max_span = int(math.ceil(math.pi / dth)) - 1
    while max_span * dth >= math.pi:
        max_span -= 1
    bad = set()
    idx = np.arange(n)
    for span in range(2, max_span + 1):
        j = (idx + span) % n
        pair_ok = finite & finite[j]
        if not pair_ok.any():
            continue
        i_ok = idx[pair_ok]
        j_ok = j[pair_ok]
        tj = th[i_ok] + span * dth
        denom = math.sin(span * dth)
        for off in range(1, span):
            k = (i_ok + off) % n
            tk = th[i_ok] + off * dth
            bound = (m[i_ok] * np.sin(tj - tk) + m[j_ok] * np.sin(tk - th[i_ok])) / denom
            viol = finite[k] & (m[k] > bound + tau)
            if viol.any():
                bad.update(int(v) for v in k[viol])
    return Check(not bad, sorted(bad))


def audit_strip_properties(sample: DirectionSample, profile: H3Profile, tolerances: Tolerances = Tolerances()) -> PropertyReport:
    """Symmetry, pole exclusion, nonemptiness, lower semicontinuity proxy and great-circle convexity."""
    return PropertyReport({
        "symmetry": _symmetry(sample, tolerances.tau_sym),
        "pole_exclusion": _poles(sample, tolerances.eps_pole),
        "nonempty": _nonempty(profile),
        "lsc": _lsc(profile, tolerances.tau_lsc),
        "convexity": _convexity(profile, tolerances.tau_cvx),
    })
