import math

import numpy as np
import pytest

from vrigid.direction_set import estimate_h3_profile, sample_direction_set
from vrigid.errors import ParseError
from vrigid.formats import (grid_csv_text, parse_grid_csv, parse_pgm, parse_spec_text, pgm_text,
                            profile_csv_text, raster_pixels, sample_csv_text)
from vrigid.function_model import Affine, ExpAffine, ExpStrip, Expression, FunctionSpec, Grid, Window, evaluate


def test_spec_expression_and_rotation():
    spec = parse_spec_text("# comment\nf(x,y) = exp(x) + y   # trailing\nrotation_z = pi/2\n")
    assert isinstance(spec.body, Expression) and spec.z_rotation == pytest.approx(math.pi / 2)
    assert evaluate(spec, 0.0, 1.0) == pytest.approx(math.e, abs=1e-12)


def test_spec_families():
    s = parse_spec_text("family = expaffine\na = 2\nb = 3\nd = -0.7\nk = 1.5\n")
    assert s.body == ExpAffine(2, 3, -0.7, 1.5)
    s = parse_spec_text("family = affine\nb = 1\n")
    assert s.body == Affine(0, 1, 0)
    s = parse_spec_text("family = expstrip\na = 1\nk = 2\ns(y) = 2 + cos(y)\n")
    assert isinstance(s.body, ExpStrip) and evaluate(s, 0.0, 0.0) == 4


@pytest.mark.parametrize("text,line,column", [
    ("family = expaffine\nb = 1\nk = 0\n", 3, 5),
    ("family = expaffine\nb = 1\n  k   =   0\n", 3, 11),
    ("f(x,y) = x\nfoo = 1\n", 2, 1),
    ("f(x,y) = x +* y\n", 1, 13),
    ("f(x,y) = x\nf(x,y) = y\n", 2, 1),
    ("family = cubic\n", 1, 10),
    ("family = expstrip\nk = 1\ns(y) = x + y\n", 3, 8),
    ("family = affine\nk = 1\n", 2, 1),
    ("just some words\n", 1, 1),
])
def test_spec_errors_have_location(text, line, column):
    with pytest.raises(ParseError) as exc:
        parse_spec_text(text)
    assert (exc.value.line, exc.value.column) == (line, column)


def test_spec_needs_one_source():
    with pytest.raises(ParseError):
        parse_spec_text("rotation_z = 1\n")
    with pytest.raises(ParseError):
        parse_spec_text("f(x,y) = x\nfamily = affine\n")


def _grid_text(nx=5, ny=4):
    xs, ys = np.linspace(-1, 1, nx), np.linspace(0, 3, ny)
    rows = ["x,y,z"] + [f"{x!r},{y!r},{float(2 * x - y)!r}" for y in ys.tolist() for x in xs.tolist()]
    return "\n".join(rows) + "\n"


def test_grid_csv_round_trip():
    g = parse_grid_csv(_grid_text())
    assert g.values.shape == (4, 5)
    assert g.origin == (-1.0, 0.0) and g.spacing == pytest.approx((0.5, 1.0))
    assert evaluate(FunctionSpec(g), 0.5, 2.0) == pytest.approx(-1.0)
    again = parse_grid_csv(grid_csv_text(g))
    assert again == g


def test_grid_csv_non_rectangular_names_row():
    lines = _grid_text().splitlines()
    del lines[8]  # drops x=0.5 of the second y row (file line 9)
    with pytest.raises(ParseError) as exc:
        parse_grid_csv("\n".join(lines))
    assert exc.value.line == 9 and "row 9" in str(exc.value)
    lines = _grid_text().splitlines()[:-2]
    with pytest.raises(ParseError) as exc:
        parse_grid_csv("\n".join(lines))
    assert exc.value.line == 17 and "row 17" in str(exc.value)


@pytest.mark.parametrize("text", ["a,b,c\n1,2,3\n", "x,y,z\n1,2\n", "x,y,z\n1,2,q\n", "", "x,y,z\n0,0,0\n"])
def test_grid_csv_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse_grid_csv(text)


def test_profile_and_sample_csv():
    spec = FunctionSpec(Affine(0, 1, 0))
    w = Window.square(2)
    p = estimate_h3_profile(spec, [w], nbins=8)
    lines = profile_csv_text(p).splitlines()
    assert lines[0] == "theta,top,bottom,topSaturated,bottomSaturated" and len(lines) == 9
    assert lines[1].endswith(",false,false")
    s = sample_direction_set(spec, w, 10)
    rows = sample_csv_text(s).splitlines()
    assert rows[0] == "x,y,z" and len(rows) == 21
    assert np.allclose([list(map(float, r.split(","))) for r in rows[1:]], s.directions, atol=0)


def test_raster_zero_function_on_equator():
    s = sample_direction_set(FunctionSpec(Affine()), Window.square(3), 500)
    img = raster_pixels(s.directions, 720, 360)
    rows = np.nonzero(img.any(axis=1))[0]
    assert rows.tolist() == [180]
    text = pgm_text(img)
    assert text.startswith("P2\n720 360\n255\n")
    assert np.array_equal(parse_pgm(text), img)


def test_raster_plane_traces_one_band():
    s = sample_direction_set(FunctionSpec(Affine(0, 1, 0)), Window.square(3), 3000)
    img = raster_pixels(s.directions, 720, 360)
    cols, rows = np.nonzero(img.T)
    # z = cos(az) * sqrt(1 - z^2) on the great circle: z = cos(az) / sqrt(1 + cos^2(az))
    az = (cols + 0.5) / 720 * 2 * math.pi
    z = (1 - (rows + 0.5) / 360 * 2)
    expected = np.cos(az) / np.sqrt(1 + np.cos(az) ** 2)
    assert np.max(np.abs(z - expected)) < 0.02
    assert set(np.unique(img)) == {0, 255}
