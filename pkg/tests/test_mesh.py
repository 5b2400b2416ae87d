import numpy as np
import pytest

from dpgbem.exceptions import MeshError
from dpgbem.mesh import (build_cube_surface, build_square_screen, element_geometry, refine,
                         refine_uniform, single_triangle, skeleton, validate_mesh, write_obj)


def test_cube_counts(cube):
    sk = skeleton(cube)
    assert cube.num_triangles == 12
    assert cube.is_closed
    assert sk.num_edges == 18
    assert not sk.is_boundary.any()
    assert cube.num_vertices - sk.num_edges + cube.num_triangles == 2
    np.testing.assert_allclose(np.abs(cube.vertices), 1.0)


def test_cube_outward_normals(cube):
    centroids = cube.corners.mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", cube.normals, centroids) > 0)


def test_screen_counts(screen):
    sk = skeleton(screen)
    assert screen.num_triangles == 4
    assert not screen.is_closed
    assert sk.is_boundary.sum() == 4
    assert (~sk.is_boundary).sum() == 4
    assert screen.total_area == pytest.approx(4.0, rel=1e-14)
    np.testing.assert_allclose(screen.normals, [[0, 0, 1]] * 4)
    np.testing.assert_allclose(screen.vertices[:, 2], 0.0)


@pytest.mark.parametrize("builder", [build_cube_surface, build_square_screen])
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_refinement_invariants(builder, levels):
    m0 = builder()
    m = refine(m0, levels)
    assert m.num_triangles == m0.num_triangles * 4 ** levels
    assert m.total_area == pytest.approx(m0.total_area, rel=1e-12)
    assert m.is_closed == m0.is_closed
    validate_mesh(m)
    # face ids constant along ancestry
    np.testing.assert_array_equal(m.face_ids, m0.face_ids[m.roots])
    # children lie in the plane of their root
    c0 = m0.corners[m.roots, 0]
    d = np.einsum("nki,ni->nk", m.corners - c0[:, None], m0.normals[m.roots])
    np.testing.assert_allclose(d, 0.0, atol=1e-13)
    np.testing.assert_allclose(m.normals, m0.normals[m.roots], atol=1e-13)


@pytest.mark.parametrize("builder", [build_cube_surface, build_square_screen])
def test_h_min_halves(builder):
    m = builder()
    for _ in range(3):
        f = refine_uniform(m)
        assert 0.45 <= f.h_min / m.h_min <= 0.55
        m = f


def test_shape_regularity_bounded(screen):
    g0 = screen.shape_regularity()
    m = screen
    for _ in range(5):
        m = refine_uniform(m)
        assert m.shape_regularity() <= 2.0 * g0


@pytest.mark.parametrize("builder", [build_cube_surface, build_square_screen])
def test_skeleton_signs(builder):
    m = refine(builder(), 2)
    sk = m.skeleton
    for e, inc in enumerate(sk.edge_tris):
        s = [sk.signs[t, k] for t, k in inc]
        if sk.is_boundary[e]:
            assert len(s) == 1
        else:
            assert len(s) == 2 and sum(s) == 0
    # global orientation from low to high vertex index
    assert np.all(sk.edges[:, 0] < sk.edges[:, 1])


def test_refined_mesh_has_no_hanging_nodes(cube):
    m = refine(cube, 2)
    sk = m.skeleton
    assert not sk.is_boundary.any()
    assert m.num_vertices - sk.num_edges + m.num_triangles == 2


def test_element_geometry_right_triangle():
    m = single_triangle([[0, 0, 0], [2, 0, 0], [0, 2, 0]])
    g = element_geometry(m, 0)
    assert g.area == pytest.approx(2.0)
    assert g.h == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(g.normal, [0, 0, 1])
    # tangents of consecutive edges turn counterclockwise
    for k in range(3):
        cr = np.cross(g.tangents[k], g.tangents[(k + 1) % 3])
        assert cr @ g.normal > 0


def test_cube_geometry(cube):
    for t in range(cube.num_triangles):
        g = element_geometry(cube, t)
        assert g.area == pytest.approx(2.0)
        assert g.h == pytest.approx(np.sqrt(2.0))
    top = [t for t in range(12) if np.allclose(cube.corners[t, :, 2], 1.0)]
    assert len(top) == 2
    for t in top:
        np.testing.assert_allclose(element_geometry(cube, t).normal, [0, 0, 1])


def test_degenerate_triangle_rejected():
    m = single_triangle([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
    with pytest.raises(MeshError):
        element_geometry(m, 0)


def test_refinement_is_deterministic(cube):
    a, b = refine(cube, 2), refine(cube, 2)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.triangles, b.triangles)


def test_write_obj(tmp_path, screen):
    p = tmp_path / "m.obj"
    write_obj(screen, p)
    lines = p.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 5
    assert sum(l.startswith("f ") for l in lines) == 4
