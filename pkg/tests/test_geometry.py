import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foilgen import geometry as g
from foilgen.naca import naca4, stations_with_nose, surface_y_at


def test_cosine_grid():
    assert g.SURFACE_X[0] == 0.0 and g.SURFACE_X[-1] == 1.0
    assert np.all(np.diff(g.SURFACE_X) > 0)
    assert len(g.CANONICAL_X) == 200
    with pytest.raises(ValueError):
        g.SURFACE_X[0] = 1.0


def test_parse_selig_basic():
    text = "My foil\n1.0 0.0\n0.5 0.05\n0.0 0.0\n0.5 -0.05\n1.0 0.0\n"
    p = g.parse_selig(text)
    assert p.name == "My foil"
    assert p.points.shape == (5, 2)


def test_parse_skips_blank_lines():
    p = g.parse_selig("\n\nfoil\n\n1 0\n0.5 0.1\n\n0 0\n0.5 -0.1\n1 0\n")
    assert len(p) == 5


def test_parse_lednicer():
    text = "led\n3. 3.\n\n0 0\n0.5 0.1\n1 0\n\n0 0\n0.5 -0.1\n1 0\n"
    p = g.parse_selig(text)
    assert p.points[0].tolist() == [1.0, 0.0]
    assert p.points[2].tolist() == [0.0, 0.0]
    assert p.points[-1].tolist() == [1.0, 0.0]
    assert len(p) == 5


@pytest.mark.parametrize(
    "text, err",
    [
        ("", g.EmptyInput),
        ("name\n1 0\n0 0\n", g.TooFewPoints),
        ("name\n1 0 3\n0 0\n1 1\n2 2\n", g.MalformedLine),
        ("name\n1 a\n0 0\n1 1\n2 2\n", g.MalformedLine),
    ],
)
def test_parse_errors(text, err):
    with pytest.raises(err):
        g.parse_selig(text)


def test_selig_roundtrip(tmp_path):
    p = naca4("2412")
    path = tmp_path / "f.dat"
    g.write_profile(path, p)
    q = g.read_profile(path)
    assert q.name == p.name
    np.testing.assert_allclose(q.points, p.points, atol=5e-7)


def test_normalize():
    p = g.AirfoilProfile("x", [[3.0, 0.0], [2.0, 0.2], [1.0, 0.0], [2.0, -0.2], [3.0, 0.0]])
    n = g.normalize(p)
    assert n.x.min() == 0.0 and n.x.max() == 1.0
    np.testing.assert_allclose(n.y, [0, 0.1, 0, -0.1, 0])


def test_normalize_errors():
    with pytest.raises(g.ZeroChord):
        g.normalize(g.AirfoilProfile("z", [[1, 0], [1, 1], [1, 2], [1, 3]]))
    with pytest.raises(g.YOutOfRange):
        g.normalize(g.AirfoilProfile("y", [[1, 0], [0.5, 2], [0, 0], [0.5, -0.1]]))


def test_normalize_identity_is_same_object():
    p = naca4("0012")
    assert g.normalize(p) is p


def test_repanelize_shape_and_grid(fixture_profiles):
    for p in fixture_profiles:
        assert p.is_canonical()
        assert p.points[99].tolist() == p.points[100].tolist()


@pytest.mark.parametrize("code", ["0012", "2412", "4415", "0006"])
def test_repanelize_matches_analytic(code):
    raw = naca4(code, stations=stations_with_nose(code))
    x0 = raw.x.min()
    c = raw.x.max() - x0
    yu, yl = g.surfaces_on_grid(g.canonicalize(raw))
    xo = g.SURFACE_X * c + x0
    assert np.abs(yu - surface_y_at(xo, code, True) / c).max() < 1e-3
    assert np.abs(yl - surface_y_at(xo, code, False) / c).max() < 1e-3


def test_repanelize_idempotent(fixture_profiles):
    for p in fixture_profiles[:5]:
        q = g.repanelize(p)
        assert np.abs(q.points - p.points).max() <= 1e-9


def test_repanelize_errors():
    with pytest.raises(g.NoLeadingEdge):
        g.repanelize(g.AirfoilProfile("n", [[1, 0], [0.6, 0.1], [0.2, 0], [0.6, -0.1], [1, 0]]))
    with pytest.raises(g.DegenerateProfile):
        g.repanelize(g.AirfoilProfile("d", [[1, 0], [1, 0], [0, 0], [0, 0]]))


def test_canonical_roundtrip_exact(fixture_profiles):
    for p in fixture_profiles:
        s = g.to_canonical(p)
        q = g.from_canonical(s, p.name)
        assert np.array_equal(q.points, p.points)
        assert np.array_equal(np.asarray(g.to_canonical(q)), np.asarray(s))


def test_canonical_errors():
    with pytest.raises(g.WrongPointCount):
        g.CanonicalSample(np.zeros((2, 99)))
    with pytest.raises(g.WrongPointCount):
        g.to_canonical(naca4("0012"))


def test_metrics_naca():
    m = g.geometric_metrics(g.canonicalize(naca4("2412")))
    assert abs(m.thickness_ratio - 0.12) < 2e-3
    assert abs(m.max_camber - 0.02) < 2e-3
    assert m.chord == 1.0 and not m.negative_thickness


def test_metrics_crossing_warns():
    y = np.zeros((2, 100))
    y[0, 40:60] = -0.01
    with pytest.warns(g.NegativeThicknessWarning):
        m = g.geometric_metrics(g.from_canonical(y))
    assert m.negative_thickness and m.max_thickness == 0.0


def test_mirror_flips_camber():
    p = g.canonicalize(naca4("2412"))
    q = g.canonicalize(g.mirror(p))
    mp, mq = g.geometric_metrics(p), g.geometric_metrics(q)
    assert abs(mp.thickness_ratio - mq.thickness_ratio) < 1e-9
    np.testing.assert_allclose(mq.camber_line[:, 1], -mp.camber_line[:, 1], atol=1e-9)


def test_as_canonical_snaps_rounded_files(tmp_path, fixture_profiles):
    p = fixture_profiles[3]
    g.write_profile(tmp_path / "a.dat", p)
    q = g.as_canonical(g.read_profile(tmp_path / "a.dat"))
    assert q.is_canonical()
    assert np.abs(q.y - p.y).max() <= 5e-7


@settings(max_examples=25, deadline=None)
@given(
    t=st.floats(0.04, 0.25),
    m=st.integers(0, 6),
    pos=st.integers(2, 6),
    scale=st.floats(0.2, 5.0),
    shift=st.floats(-3.0, 3.0),
)
def test_property_normalize_repanelize(t, m, pos, scale, shift):
    code = f"{m}{pos}{int(round(t * 100)):02d}"
    raw = naca4(code, n_per_side=40)
    moved = g.AirfoilProfile("p", raw.points * scale + np.array([shift, 0.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error", g.NegativeThicknessWarning)
        c = g.canonicalize(moved)
        metrics = g.geometric_metrics(c)
    assert c.is_canonical()
    assert np.all(np.isfinite(c.points))
    assert abs(metrics.thickness_ratio - int(code[2:]) / 100) < 5e-3
    assert np.abs(g.repanelize(c).points - c.points).max() <= 1e-9
