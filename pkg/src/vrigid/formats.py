"""Text formats: function spec files, grid CSV input, profile/sample CSV and PGM raster output."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from . import expr as _expr
from .direction_set import DirectionSample, H3Profile
from .errors import EvalError, IoError, ParseError
from .function_model import Affine, ExpAffine, ExpStrip, ExprCurve, Expression, FunctionSpec, Grid

SPEC_KEYS = ("f(x,y)", "family", "a", "b", "d", "k", "s(y)", "rotation_z")
FAMILY_KEYS = {
    "affine": {"a", "b", "d"},
    "expstrip": {"a", "k", "s(y)"},
    "expaffine": {"a", "b", "d", "k"},
}
REQUIRED_KEYS = {"affine": set(), "expstrip": {"k", "s(y)"}, "expaffine": {"b", "k"}}


# ---------------------------------------------------------------- spec files

def _constant(text: str, line: int, col: int) -> float:
    """A numeric value; constant expressions such as ``pi/4`` are allowed."""
    node = _expr.parse(text, line, col - 1)
    if _expr.variables(node):
        raise ParseError("value must be a constant", line, col)
    try:
        value = float(_expr.evaluate(node, 0.0, 0.0))
    except EvalError as exc:
        raise ParseError(str(exc), line, col) from None
    if not math.isfinite(value):
        raise ParseError("value must be finite", line, col)
    return value


def parse_spec_text(text: str, source: str | None = None) -> FunctionSpec:
    """Parse ``key = value`` lines (``#`` starts a comment) into a FunctionSpec."""
    entries = {}  # key -> (raw value, line, value column)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError("expected 'key = value'", lineno, col, source)
        key_part, value_part = line.split("=", 1)
        key = "".join(key_part.split())
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        if key not in SPEC_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno, key_col, source)
        if key in entries:
            raise ParseError(f"duplicate key {key!r}", lineno, key_col, source)
        value_col = len(key_part) + 1 + (len(value_part) - len(value_part.lstrip())) + 1
        value = value_part.strip()
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno, value_col, source)
        entries[key] = (value, lineno, value_col)
    try:
        return _build_spec(entries)
    except ParseError as exc:
        if source is None:
            raise
        raise ParseError(exc.message, exc.line, exc.column, source) from None


def _build_spec(entries: dict) -> FunctionSpec:
    rotation = 0.0
    if "rotation_z" in entries:
        rotation = _constant(*entries["rotation_z"])
    has_f, has_family = "f(x,y)" in entries, "family" in entries
    if has_f == has_family:
        raise ParseError("give exactly one of 'f(x,y)' or 'family'", 1 if not entries else
                         min(v[1] for v in entries.values()), 1)
    params = set(entries) - {"f(x,y)", "family", "rotation_z"}
    if has_f:
        if params:
            key = min(params, key=lambda k: entries[k][1])
            raise ParseError(f"key {key!r} only applies to closed-form families", entries[key][1], 1)
        text, line, col = entries["f(x,y)"]
        node = _expr.parse(text, line, col - 1)
        return FunctionSpec(Expression(node, text), rotation)

    name, line, col = entries["family"]
    if name not in FAMILY_KEYS:
        raise ParseError(f"unknown family {name!r}; expected one of {sorted(FAMILY_KEYS)}", line, col)
    extra = params - FAMILY_KEYS[name]
    if extra:
        key = min(extra, key=lambda k: entries[k][1])
        raise ParseError(f"key {key!r} does not belong to family {name}", entries[key][1], 1)
    missing = REQUIRED_KEYS[name] - params
    if missing:
        raise ParseError(f"family {name} needs {sorted(missing)}", line, col)
    num = {k: _constant(*entries[k]) for k in params if k != "s(y)"}
    if "k" in num and num["k"] == 0.0:
        raise ParseError("k must be nonzero", entries["k"][1], entries["k"][2])
    if name == "affine":
        body = Affine(num.get("a", 0.0), num.get("b", 0.0), num.get("d", 0.0))
    elif name == "expaffine":
        body = ExpAffine(num.get("a", 0.0), num["b"], num.get("d", 0.0), num["k"])
    else:
        text, sline, scol = entries["s(y)"]
        node = _expr.parse(text, sline, scol - 1)
        if "x" in _expr.variables(node):
            raise ParseError("s(y) may only depend on y", sline, scol)
        body = ExpStrip(num.get("a", 0.0), num["k"], ExprCurve(node, text))
    return FunctionSpec(body, rotation)


def read_spec_file(path) -> FunctionSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read spec file {path}: {exc}") from exc
    return parse_spec_text(text, source=str(path))


# ---------------------------------------------------------------- grid CSV

def parse_grid_csv(text: str, source: str | None = None, rel_tol: float = 1e-9) -> Grid:
    """Header ``x,y,z``; rows run over x fastest, then y; the lattice must be rectangular and uniform."""
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(i, r) for i, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty grid file", None, None, source)
    hline, header = rows[0]
    if [h.strip() for h in header] != ["x", "y", "z"]:
        raise ParseError("header must be 'x,y,z'", hline, 1, source)
    data = []
    for lineno, r in rows[1:]:
        if len(r) != 3:
            raise ParseError(f"row {lineno}: expected 3 fields, found {len(r)}", lineno, 1, source)
        try:
            data.append((lineno, float(r[0]), float(r[1]), float(r[2])))
        except ValueError:
            raise ParseError(f"row {lineno}: non-numeric field", lineno, 1, source) from None
    if len(data) < 4:
        raise ParseError("grid needs at least 2x2 nodes", None, None, source)
    y0 = data[0][2]
    nx = next((i for i, d in enumerate(data) if d[2] != y0), len(data))
    if nx < 2:
        bad = data[1]
        raise ParseError(f"row {bad[0]}: lattice needs at least 2 x values per y", bad[0], 1, source)
    if nx == len(data):
        raise ParseError("grid needs at least 2 distinct y values", None, None, source)
    x0, hx = data[0][1], data[1][1] - data[0][1]
    hy = data[nx][2] - y0
    if hx <= 0 or hy <= 0:
        bad = data[1] if hx <= 0 else data[nx]
        raise ParseError(f"row {bad[0]}: coordinates must increase", bad[0], 1, source)
    ny = -(-len(data) // nx)
    tx = rel_tol * max(1.0, abs(x0), abs(x0 + (nx - 1) * hx))
    ty = rel_tol * max(1.0, abs(y0), abs(y0 + (ny - 1) * hy))
    values = np.empty((ny, nx))
    for n, (lineno, x, y, z) in enumerate(data):
        i, j = divmod(n, nx)
        if abs(x - (x0 + j * hx)) > tx or abs(y - (y0 + i * hy)) > ty:
            raise ParseError(f"row {lineno}: point ({x}, {y}) breaks the rectangular lattice "
                             f"with {nx} x values per row", lineno, 1, source)
        values[i, j] = z
    if len(data) % nx:
        bad = data[(len(data) // nx) * nx]
        raise ParseError(f"row {bad[0]}: last lattice row is incomplete", bad[0], 1, source)
    return Grid((x0, y0), (hx, hy), values)


def read_grid_csv(path) -> FunctionSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read grid file {path}: {exc}") from exc
    return FunctionSpec(parse_grid_csv(text, source=str(path)))


def grid_csv_text(grid: Grid) -> str:
    ny, nx = grid.values.shape
    lines = ["x,y,z"]
    for i in range(ny):
        for j in range(nx):
            x = grid.origin[0] + j * grid.spacing[0]
            y = grid.origin[1] + i * grid.spacing[1]
            lines.append(f"{x!r},{y!r},{float(grid.values[i, j])!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- outputs

def profile_csv_text(profile: H3Profile) -> str:
    lines = ["theta,top,bottom,topSaturated,bottomSaturated"]
    for th, t, b, ts, bs in profile.csv_rows():
        lines.append(f"{th!r},{t!r},{b!r},{str(ts).lower()},{str(bs).lower()}")
    return "\n".join(lines) + "\n"


def sample_csv_text(sample: DirectionSample) -> str:
    lines = ["x,y,z"]
    lines += [f"{float(x)!r},{float(y)!r},{float(z)!r}" for x, y, z in sample.directions]
    return "\n".join(lines) + "\n"


def raster_pixels(directions: np.ndarray, width: int = 720, height: int = 360) -> np.ndarray:
    """Equirectangular (azimuth, z) occupancy image, rows from z = 1 down to z = -1."""
    if width < 1 or height < 1:
        raise ValueError("raster dimensions must be positive")
    d = np.asarray(directions, dtype=float)
    img = np.zeros((height, width), dtype=np.uint8)
    if d.size == 0:
        return img
    az = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
    col = np.clip(np.floor(az / (2.0 * math.pi) * width).astype(int), 0, width - 1)
    row = np.clip(np.floor((1.0 - d[:, 2]) / 2.0 * height).astype(int), 0, height - 1)
    img[row, col] = 255
    return img


def pgm_text(img: np.ndarray) -> str:
    """Plain (P2) PGM."""
    h, w = img.shape
    body = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    return f"P2\n{w} {h}\n255\n{body}\n"


def parse_pgm(text: str) -> np.ndarray:
    tokens = [t for line in text.splitlines() for t in line.split("#", 1)[0].split()]
    if not tokens or tokens[0] != "P2":
        raise ParseError("not a plain PGM (P2) image", 1, 1)
    w, h = int(tokens[1]), int(tokens[2])
    vals = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if vals.size != w * h:
        raise ParseError(f"expected {w * h} pixels, found {vals.size}")
    return vals.reshape(h, w)


def write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
