import math

import numpy as np
import pytest

from weylsampl import InvalidInputError, ParseError, candidate_pool, make_manifold, quadrature
from weylsampl.manifolds import Mesh
from weylsampl.meshes import (cotangent_stiffness, format_off, icosphere, lumped_mass, parse_off,
                              read_off, torus_grid, write_off)

TETRA = """OFF
# a tetrahedron
4 4 0
0 0 0
1 0 0
0 1 0
0 0 1
3 0 2 1
3 0 1 3
3 0 3 2
3 1 2 3
"""


def test_parse_tetrahedron():
    v, f = parse_off(TETRA)
    assert v.shape == (4, 3) and f.shape == (4, 3)
    assert f[0].tolist() == [0, 2, 1]


def test_counts_on_header_line():
    v, f = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    assert len(v) == 3 and len(f) == 1


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("PLY\n", 1),
    ("OFF\n4 x 0\n", 2),
    ("OFF\n4 1 0\n0 0 0\n1 0\n", 4),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 2\n", 6),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n", 6),
    ("OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n", 7),
    ("OFF\n3 1 0\n0 0 0\n1 a 0\n0 1 0\n3 0 1 2\n", 4),
])
def test_parse_errors_report_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_off(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_off_roundtrip(tmp_path):
    v, f = icosphere(1)
    path = tmp_path / "ico.off"
    write_off(path, v, f)
    v2, f2 = read_off(path)
    np.testing.assert_array_equal(v, v2)
    np.testing.assert_array_equal(f, f2)
    assert parse_off(format_off(v, f))[1].tolist() == f.tolist()


def test_icosphere_sizes():
    for level, nv in [(0, 12), (1, 42), (2, 162), (4, 2562)]:
        v, f = icosphere(level)
        assert len(v) == nv
        assert len(f) == 20 * 4 ** level
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1, atol=1e-12)


def test_lumped_mass_and_stiffness():
    v, f = icosphere(3)
    mass = lumped_mass(v, f)
    assert np.all(mass > 0)
    assert mass.sum() == pytest.approx(4 * math.pi, rel=0.01)
    S = cotangent_stiffness(v, f)
    assert abs(S - S.T).max() < 1e-12
    np.testing.assert_allclose(S @ np.ones(len(v)), 0, atol=1e-10)
    x = np.random.default_rng(0).standard_normal(len(v))
    assert x @ (S @ x) >= 0


def test_torus_grid_area():
    v, f, per = torus_grid(16, 2.0)
    m = Mesh(v, f, period=per)
    assert m.volume == pytest.approx(4.0)
    assert m.diameter == pytest.approx(math.sqrt(2.0), rel=0.1)


def test_mesh_rejects_disconnected_and_degenerate():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 0], [6, 5, 0], [5, 6, 0]], float)
    with pytest.raises(InvalidInputError, match="connected"):
        Mesh(v, np.array([[0, 1, 2], [3, 4, 5]]))
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], float)
    with pytest.raises(InvalidInputError, match="degenerate"):
        Mesh(v, np.array([[0, 1, 2]]))
    with pytest.raises(InvalidInputError):
        Mesh(v, np.array([[0, 1, 3]]))


def test_mesh_model_basics():
    m = make_manifold("mesh", icosphere=4)
    assert m.n_vertices == 2562
    np.testing.assert_array_equal(candidate_pool(m, 10 ** 6, 0), np.arange(2562))
    q = quadrature(m, 1)
    assert q.weights.sum() == m.volume
    # graph geodesics overestimate the true distance by O(h)
    assert m.distance(0, int(np.argmin(m.vertices @ m.vertices[0]))) == pytest.approx(math.pi, rel=0.1)
    assert m.injectivity_radius == pytest.approx(m.diameter / 4)
    m2 = make_manifold("mesh", icosphere=2, injectivity=0.1)
    assert m2.injectivity_radius == 0.1


def test_mesh_from_path(tmp_path):
    v, f = icosphere(2)
    path = tmp_path / "s.off"
    write_off(path, v, f)
    m = make_manifold("mesh", path=str(path))
    assert m.n_vertices == 162
    with pytest.raises(InvalidInputError):
        make_manifold("mesh")
