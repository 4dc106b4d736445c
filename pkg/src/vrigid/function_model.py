"""Candidate functions f: R^2 -> R, their evaluation and rigidity-preserving normalizations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import expr as _expr
from .errors import DegenerateFamily, DegenerateSegment, OutOfDomain


# ---------------------------------------------------------------- curves s(y)

@dataclass(frozen=True)
class ExprCurve:
    """s(y) given by an expression in ``y`` (``x`` must not occur)."""

    node: _expr.Node
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> "ExprCurve":
        node = _expr.parse(text)
        if "x" in _expr.variables(node):
            raise ValueError("curve expression may only depend on y")
        return cls(node, text)

    def __call__(self, y):
        return _expr.evaluate(self.node, 0.0, y)


@dataclass(frozen=True)
class TableCurve:
    """s(y) sampled on strictly increasing abscissae, linearly interpolated."""

    ys: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=float)
        if len(ys) < 2 or len(ys) != len(self.values):
            raise ValueError("table curve needs at least two (y, s) pairs")
        if np.any(np.diff(ys) <= 0):
            raise ValueError("table abscissae must be strictly increasing")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.ys[0]) or np.any(y > self.ys[-1]):
            raise OutOfDomain("s(y) table queried outside its abscissae")
        return np.interp(y, self.ys, self.values)


CurveSpec = Union[ExprCurve, TableCurve]


# ---------------------------------------------------------------- bodies

@dataclass(frozen=True)
class Affine:
    a: float = 0.0
    b: float = 0.0
    d: float = 0.0

    def __call__(self, x, y):
        return self.a + self.b * x + self.d * y


@dataclass(frozen=True)
class ExpStrip:
    """a + s(y) e^{kx}."""

    a: float
    k: float
    s: CurveSpec

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("ExpStrip requires k != 0")

    def __call__(self, x, y):
        with np.errstate(over="ignore"):
            return self.a + self.s(y) * np.exp(self.k * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ExpAffine:
    """a + b e^{kx} + d y."""

    a: float
    b: float
    d: float
    k: float

    def __post_init__(self):
        if self.k == 0:
            raise ValueError("ExpAffine requires k != 0")

    def __call__(self, x, y):
        with np.errstate(over="ignore"):
            return self.a + self.b * np.exp(self.k * np.asarray(x, dtype=float)) + self.d * y


@dataclass(frozen=True)
class Expression:
    node: _expr.Node
    text: str = ""

    @classmethod
    def parse(cls, text: str) -> "Expression":
        return cls(_expr.parse(text), text)

    def __call__(self, x, y):
        return _expr.evaluate(self.node, x, y)


@dataclass(frozen=True, eq=False)
class Grid:
    """Samples z[i, j] = f(x0 + j*hx, y0 + i*hy); bilinear inside the hull."""

    origin: tuple[float, float]
    spacing: tuple[float, float]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 2 or vals.shape[1] < 2:
            raise ValueError("grid values must be a rectangular matrix with at least 2x2 nodes")
        if not (self.spacing[0] > 0 and self.spacing[1] > 0):
            raise ValueError("grid spacing must be strictly positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def bounds(self):
        ny, nx = self.values.shape
        x0, y0 = self.origin
        return (x0, x0 + (nx - 1) * self.spacing[0], y0, y0 + (ny - 1) * self.spacing[1])

    def contains(self, x, y, slack=1e-12):
        xmin, xmax, ymin, ymax = self.bounds
        sx = slack * max(1.0, abs(xmin), abs(xmax))
        sy = slack * max(1.0, abs(ymin), abs(ymax))
        return (x >= xmin - sx) & (x <= xmax + sx) & (y >= ymin - sy) & (y <= ymax + sy)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not np.all(self.contains(x, y)):
            raise OutOfDomain("grid function queried outside its hull")
        ny, nx = self.values.shape
        u = np.clip((x - self.origin[0]) / self.spacing[0], 0.0, nx - 1)
        v = np.clip((y - self.origin[1]) / self.spacing[1], 0.0, ny - 1)
        j = np.minimum(np.floor(u).astype(int), nx - 2)
        i = np.minimum(np.floor(v).astype(int), ny - 2)
        fu = u - j
        fv = v - i
        z = self.values
        return ((1 - fu) * (1 - fv) * z[i, j] + fu * (1 - fv) * z[i, j + 1]
                + (1 - fu) * fv * z[i + 1, j] + fu * fv * z[i + 1, j + 1])

    def __eq__(self, other):
        return (isinstance(other, Grid) and self.origin == other.origin
                and self.spacing == other.spacing and np.array_equal(self.values, other.values))

    __hash__ = None


Body = Union[Affine, ExpStrip, ExpAffine, Expression, Grid]


@dataclass(frozen=True)
class Scaled:
    """Body multiplied by a constant; used for c*f in witness checks."""

    factor: float
    inner: "Body"

    def __call__(self, x, y):
        return self.factor * self.inner(x, y)


@dataclass(frozen=True)
class FunctionSpec:
    """f(x, y) = body(R_{-z_rotation} (x, y))."""

    body: Body
    z_rotation: float = 0.0

    @property
    def family(self) -> str:
        return {Affine: "affine", ExpStrip: "expstrip", ExpAffine: "expaffine",
                Expression: "expression", Grid: "grid", Scaled: "scaled"}[type(self.body)]

    def describe(self) -> str:
        b = self.body
        if isinstance(b, Expression):
            text = b.text or _expr.to_text(b.node)
        elif isinstance(b, Grid):
            text = f"grid {b.values.shape[1]}x{b.values.shape[0]} over {b.bounds}"
        elif isinstance(b, ExpStrip):
            s = b.s.text if isinstance(b.s, ExprCurve) else "table"
            text = f"{b.a!r} + s(y)*exp({b.k!r}*x), s(y) = {s}"
        elif isinstance(b, ExpAffine):
            text = f"{b.a!r} + {b.b!r}*exp({b.k!r}*x) + {b.d!r}*y"
        elif isinstance(b, Affine):
            text = f"{b.a!r} + {b.b!r}*x + {b.d!r}*y"
        else:
            text = repr(b)
        if self.z_rotation:
            text += f" rotated by {self.z_rotation!r} rad"
        return text


@dataclass(frozen=True)
class Window:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int = 41
    ny: int = 41

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("window requires xmin < xmax and ymin < ymax")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("window grid counts must be >= 2")

    @classmethod
    def square(cls, half: float, n: int = 41, center=(0.0, 0.0)) -> "Window":
        return cls(center[0] - half, center[0] + half, center[1] - half, center[1] + half, n, n)

    @property
    def center(self):
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    @property
    def size(self):
        return max(self.xmax - self.xmin, self.ymax - self.ymin)

    def mesh(self, nx=None, ny=None):
        xs = np.linspace(self.xmin, self.xmax, nx or self.nx)
        ys = np.linspace(self.ymin, self.ymax, ny or self.ny)
        return np.meshgrid(xs, ys)

    def scaled(self, factor: float) -> "Window":
        cx, cy = self.center
        hx = 0.5 * (self.xmax - self.xmin) * factor
        hy = 0.5 * (self.ymax - self.ymin) * factor
        return replace(self, xmin=cx - hx, xmax=cx + hx, ymin=cy - hy, ymax=cy + hy)

    def contains(self, x, y):
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    def as_list(self):
        return [self.xmin, self.xmax, self.ymin, self.ymax]


def default_ladder(window: Window, rungs: int = 3) -> list[Window]:
    """Nested windows k/rungs * window (k = 1..rungs) about the window centre."""
    return [window.scaled(k / rungs) for k in range(1, rungs + 1)]


# ---------------------------------------------------------------- evaluation

def _rotate_xy(x, y, theta):
    if theta == 0.0:
        return x, y
    c, s = math.cos(theta), math.sin(theta)
    return c * x - s * y, s * x + c * y


def _base_grid(body):
    while isinstance(body, Scaled):
        body = body.inner
    return body if isinstance(body, Grid) else None


def evaluate(spec: FunctionSpec, x, y):
    """f(x, y) for scalars or broadcastable arrays."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    u, v = _rotate_xy(xa, ya, -spec.z_rotation)
    out = spec.body(u, v)
    if np.ndim(out) == 0 and np.ndim(x) == 0 and np.ndim(y) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def evaluable(spec: FunctionSpec, x, y):
    """Boolean mask of points inside the declared domain (grid hull; everything otherwise)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    body = spec.body
    while isinstance(body, Scaled):
        body = body.inner
    u, v = _rotate_xy(x, y, -spec.z_rotation)
    if isinstance(body, Grid):
        return body.contains(u, v)
    if isinstance(body, ExpStrip) and isinstance(body.s, TableCurve):
        inside = (v >= body.s.ys[0]) & (v <= body.s.ys[-1])
        return np.broadcast_to(inside, np.broadcast(x, y).shape)
    return np.ones(np.broadcast(x, y).shape, dtype=bool)


def domain_window(spec: FunctionSpec) -> Window | None:
    """Largest axis-aligned window known to be evaluable, or None when unbounded."""
    grid = _base_grid(spec.body)
    if grid is None:
        return None
    xmin, xmax, ymin, ymax = grid.bounds
    if spec.z_rotation == 0.0:
        return Window(xmin, xmax, ymin, ymax)
    # inscribed square of the inscribed disc of the rotated hull
    cx, cy = _rotate_xy(0.5 * (xmin + xmax), 0.5 * (ymin + ymax), spec.z_rotation)
    r = 0.5 * min(xmax - xmin, ymax - ymin) / math.sqrt(2.0)
    return Window(cx - r, cx + r, cy - r, cy + r)


def rotate_about_z(spec: FunctionSpec, theta: float) -> FunctionSpec:
    """Spec evaluating to f(R_{-theta}(x, y)): the graph turned by theta about the z-axis."""
    return replace(spec, z_rotation=spec.z_rotation + theta)


def scaled(spec: FunctionSpec, c: float) -> FunctionSpec:
    """Spec for c*f, keeping closed forms closed when possible."""
    b = spec.body
    if isinstance(b, Affine):
        body = Affine(c * b.a, c * b.b, c * b.d)
    elif isinstance(b, ExpAffine):
        body = ExpAffine(c * b.a, c * b.b, c * b.d, b.k)
    elif isinstance(b, Grid):
        body = Grid(b.origin, b.spacing, c * b.values)
    elif isinstance(b, Scaled):
        body = Scaled(c * b.factor, b.inner)
    else:
        body = Scaled(c, b)
    return replace(spec, body=body)


def sample_on(spec: FunctionSpec, window: Window, nx=None, ny=None):
    X, Y = window.mesh(nx, ny)
    return X, Y, evaluate(spec, X, Y)


def directional_slope(spec: FunctionSpec, a, b) -> float:
    """(f(b) - f(a)) / |b - a|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        raise DegenerateSegment("segment endpoints coincide")
    return (evaluate(spec, b[0], b[1]) - evaluate(spec, a[0], a[1])) / length


# ---------------------------------------------------------------- normalization chain

@dataclass(frozen=True)
class TransformStep:
    """One map of R^3 taking graph(g) to graph(g') in a normalization chain.

    kinds: ``translate_x`` (x += value), ``scale_z`` (z *= value),
    ``reflect_y`` (y -> -y), ``homothety`` (p -> value * p),
    ``shift_z`` (z += value), ``rotate_z`` (turn by value radians).
    """

    kind: str
    value: float = 0.0

    def matrix(self) -> np.ndarray:
        M = np.eye(4)
        v = self.value
        if self.kind == "translate_x":
            M[0, 3] = v
        elif self.kind == "scale_z":
            M[2, 2] = v
        elif self.kind == "reflect_y":
            M[1, 1] = -1.0
        elif self.kind == "homothety":
            M[:3, :3] *= v
        elif self.kind == "shift_z":
            M[2, 3] = v
        elif self.kind == "rotate_z":
            c, s = math.cos(v), math.sin(v)
            M[:2, :2] = [[c, -s], [s, c]]
        else:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        return M

    def apply(self, points: np.ndarray) -> np.ndarray:
        M = self.matrix()
        return points @ M[:3, :3].T + M[:3, 3]


@dataclass(frozen=True)
class TransformChain:
    """Steps applied in order to graph(e^x + y) to obtain graph(f)."""

    steps: tuple[TransformStep, ...] = field(default_factory=tuple)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        for step in self.steps:
            pts = step.apply(pts)
        return pts

    def kinds(self):
        return [s.kind for s in self.steps]

    def __len__(self):
        return len(self.steps)


NORMAL_FORM = ExpAffine(0.0, 1.0, 1.0, 1.0)


def normalize_exp_affine(spec: FunctionSpec) -> tuple[FunctionSpec, TransformChain]:
    """Reduce a + b e^{kx} + dy to e^x + y and record how to get back.

    Reverse order of the reduction: homothety by k, subtract a, reflect in the
    xz-plane when sign(b) != sign(d), divide by d, shift x by log|kb/d|.
    """
    body = spec.body
    if not isinstance(body, ExpAffine):
        raise DegenerateFamily("normalize_exp_affine needs an ExpAffine body")
    if body.b == 0 or body.d == 0:
        raise DegenerateFamily("b and d must both be nonzero")
    a, b, d, k = body.a, body.b, body.d, body.k
    # k f(x/k, y/k) = k a + (k b) e^x + d y; after removing a, B e^x + D y
    B, D = k * b, d
    reflect = (B > 0) != (D > 0)
    if reflect:
        D = -D
    beta = B / D  # > 0 after the reflection
    steps = [TransformStep("translate_x", -math.log(beta))]
    if D != 1.0:
        steps.append(TransformStep("scale_z", D))
    if reflect:
        steps.append(TransformStep("reflect_y"))
    if k != 1.0:
        steps.append(TransformStep("homothety", 1.0 / k))
    if a != 0.0:
        steps.append(TransformStep("shift_z", a))
    if spec.z_rotation != 0.0:
        steps.append(TransformStep("rotate_z", spec.z_rotation))
    chain = TransformChain(tuple(s for s in steps if not (s.kind == "translate_x" and s.value == 0.0)))
    return FunctionSpec(NORMAL_FORM), chain
