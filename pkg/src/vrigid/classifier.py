"""Strip-shape taxonomy of a sampled h3 profile (Cases A-D)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .direction_set import H3Profile, check_profile
from .function_model import FunctionSpec, Window, evaluate
from .sphere import height_slope_map, slope_height_map

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class AffineDirection:
    azimuth: float
    slope: float
    plane: bool = False
    spread: float = 0.0

    @property
    def direction(self):
        return (math.cos(self.azimuth), math.sin(self.azimuth))


@dataclass(frozen=True)
class RigidityCase:
    """``kind`` is one of A, B, C, D, indeterminate."""

    kind: str
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"case": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data):
        return cls(data["case"], dict(data.get("params", {})))


@dataclass(frozen=True)
class ClassifierTolerances:
    tau_zero: float = 0.02
    max_gap: int = 1


# ---------------------------------------------------------------- affine direction

def _probe_segments(window: Window, nprobes: int, rng):
    a = np.column_stack([rng.uniform(window.xmin, window.xmax, nprobes),
                         rng.uniform(window.ymin, window.ymax, nprobes)])
    frac = rng.uniform(0.2, 1.0, nprobes)
    return a, frac


def _ray_length(a, u, window: Window):
    """Distance from points a along direction u to the window boundary."""
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(u[0] > 0, (window.xmax - a[:, 0]) / u[0],
                      np.where(u[0] < 0, (window.xmin - a[:, 0]) / u[0], np.inf))
        ty = np.where(u[1] > 0, (window.ymax - a[:, 1]) / u[1],
                      np.where(u[1] < 0, (window.ymin - a[:, 1]) / u[1], np.inf))
    return np.minimum(tx, ty)


def _slopes(spec, theta, a, frac, window):
    u = np.array([math.cos(theta), math.sin(theta)])
    L = frac * _ray_length(a, u, window)
    ok = L > 1e-3 * window.size
    a, L = a[ok], L[ok]
    b = a + L[:, None] * u
    fa = evaluate(spec, a[:, 0], a[:, 1])
    fb = evaluate(spec, b[:, 0], b[:, 1])
    with np.errstate(invalid="ignore", over="ignore"):
        return (fb - fa) / L


def _spread(spec, theta, a, frac, window):
    s = _slopes(spec, theta, a, frac, window)
    if s.size < 2 or not np.all(np.isfinite(s)):
        return np.inf
    return float(np.max(s) - np.min(s))


def detect_affine_direction(spec: FunctionSpec, window: Window, nprobes: int = 64, tol: float = 1e-6,
                            nbins: int = 360, seed: int = 0) -> AffineDirection | None:
    """Azimuth along which every probed slope of f is the same constant, if any.

    For a plane every azimuth qualifies and the gradient direction is reported.
    The reported azimuth is oriented so that the slope is >= 0.
    """
    rng = np.random.default_rng(seed)
    a, frac = _probe_segments(window, nprobes, rng)
    thetas = math.pi * np.arange(nbins // 2) / (nbins // 2)
    spreads = np.array([_spread(spec, th, a, frac, window) for th in thetas])
    if np.all(spreads <= tol):
        mx = float(np.mean(_slopes(spec, 0.0, a, frac, window)))
        my = float(np.mean(_slopes(spec, math.pi / 2, a, frac, window)))
        slope = math.hypot(mx, my)
        azimuth = math.atan2(my, mx) % TWO_PI if slope > 0 else 0.0
        return AffineDirection(azimuth, slope, plane=True, spread=float(np.max(spreads)))
    best = int(np.argmin(spreads))
    step = thetas[1] - thetas[0]
    res = minimize_scalar(lambda th: _spread(spec, th, a, frac, window),
                          bounds=(thetas[best] - step, thetas[best] + step), method="bounded",
                          options={"xatol": 1e-13, "maxiter": 500})
    theta = float(res.x) if res.fun <= spreads[best] else float(thetas[best])
    # confirm on an independent probe set
    a2, frac2 = _probe_segments(window, 4 * nprobes, np.random.default_rng(seed + 1))
    slopes = _slopes(spec, theta, a2, frac2, window)
    if slopes.size < 2 or not np.all(np.isfinite(slopes)):
        return None
    d = float(np.mean(slopes))
    spread = float(np.max(np.abs(slopes - d)))
    if spread > tol:
        return None
    if d < 0:
        theta, d = theta + math.pi, -d
    elif d == 0.0 or abs(d) <= tol:
        theta = theta % math.pi
    return AffineDirection(theta % TWO_PI, d, plane=False, spread=spread)


# ---------------------------------------------------------------- profile analysis

def _components(mask: np.ndarray, max_gap: int) -> list[list[int]]:
    """Circular runs of True bins, bridging gaps of at most ``max_gap`` False bins."""
    n = len(mask)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    if idx.size == n:
        return [list(range(n))]
    # start right after a long gap so no run wraps around the cut
    gaps = (np.roll(idx, -1) - idx) % n
    cut = int(np.argmax(gaps))
    order = np.roll(idx, -(cut + 1))
    runs = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if (cur - prev) % n <= max_gap + 1:
            runs[-1].append(int(cur))
        else:
            runs.append([int(cur)])
    # the last run may join the first across the cut
    if len(runs) > 1 and (runs[0][0] - runs[-1][-1]) % n <= max_gap + 1:
        runs[0] = runs.pop() + runs[0]
    return runs


def _run_span(run, n):
    """Number of bin steps from first to last bin of a run."""
    return (run[-1] - run[0]) % n


def zero_set(profile: H3Profile, tau_zero: float = 0.02) -> np.ndarray:
    return (np.abs(profile.top) <= tau_zero) & ~profile.top_saturated


def classify_case(profile: H3Profile, affine_dir: AffineDirection | None = None,
                  tolerances: ClassifierTolerances = ClassifierTolerances()) -> RigidityCase:
    """Match a profile against the four strip shapes; Indeterminate when nothing fits."""
    problems = check_profile(profile)
    if problems:
        return RigidityCase("indeterminate", {"reason": "profile rejected: " + "; ".join(problems)})
    if affine_dir is not None:
        return RigidityCase("A", {"azimuth": float(affine_dir.azimuth % TWO_PI), "slope": float(affine_dir.slope),
                                  "source": "plane" if affine_dir.plane else "affine_direction"})
    n = profile.nbins
    dth = profile.bin_width
    th = profile.thetas
    Z = zero_set(profile, tolerances.tau_zero)
    sat_top = profile.top_saturated
    if not Z.any():
        if sat_top.all() and profile.bottom_saturated.all():
            return RigidityCase("B", {})
        return RigidityCase("indeterminate", {"reason": "no zero bins and not every bin saturated"})
    runs = _components(Z, tolerances.max_gap)
    covered = np.zeros(n, dtype=bool)
    for r in runs:
        span = _run_span(r, n)
        covered[[(r[0] + k) % n for k in range(span + 1)]] = True
    off_arc_saturated = bool(np.all(sat_top[~covered]))
    anti = profile.antipodal_index()

    if len(runs) == 1:
        run = runs[0]
        span = _run_span(run, n)
        length = span * dth
        if span == 0:
            i = run[0]
            if sat_top[anti[i]] and off_arc_saturated:
                return RigidityCase("C", {"x0": float(th[i])})
            return RigidityCase("indeterminate", {"reason": "single zero bin without saturated complement"})
        if length < math.pi - 1e-12 and off_arc_saturated:
            start = float(th[run[0]])
            return RigidityCase("D", {"interval": [start, start + length], "length": float(length)})
        if length >= math.pi - 1e-12:
            # azimuths whose antipode also lies in the arc: [start, end - pi]
            mid_off = 0.5 * (length - math.pi)
            azimuth = (th[run[0]] + mid_off) % math.pi
            return RigidityCase("A", {"azimuth": float(azimuth), "slope": 0.0, "source": "zero_arc"})
        return RigidityCase("indeterminate", {"reason": "zero arc shorter than pi without saturated complement"})

    if len(runs) == 2:
        centers = []
        for r in runs:
            span = _run_span(r, n)
            centers.append((r[0] + span / 2.0) % n)
        sep = abs(((centers[1] - centers[0]) % n) - n / 2.0)
        if sep <= tolerances.max_gap + 1:
            azimuth = (th[0] + centers[0] * dth) % math.pi
            return RigidityCase("A", {"azimuth": float(azimuth), "slope": 0.0, "source": "zero_pair"})
    return RigidityCase("indeterminate", {"reason": f"zero set has {len(runs)} components"})


def psi_profile(profile: H3Profile, c: float) -> H3Profile:
    """Profile of c*f predicted from the profile of f: slopes scale by c, saturation kept."""
    m = height_slope_map(profile.top)
    top = np.where(profile.top_saturated, 1.0, slope_height_map(c * m))
    return profile.with_top(top, profile.top_saturated)
