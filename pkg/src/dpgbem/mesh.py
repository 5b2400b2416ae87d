"""Flat-faced triangular surface meshes: builders, refinement, geometry.

Triangles are stored counterclockwise with respect to their unit normal
(outward for closed surfaces).  The first vertex of every triangle is its
newest vertex, so the refinement edge is always ``(t[1], t[2])``.
"""
from dataclasses import dataclass
from functools import cached_property
import itertools

import numpy as np

from .exceptions import MeshError


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Conforming triangulation of a polyhedral surface.

    Attributes
    ----------
    vertices : (V, 3) float array
    triangles : (N, 3) int array, counterclockwise, newest vertex first
    face_ids : (N,) int array, index of the flat face of the surface
    roots : (N,) int array, index of the ancestor triangle in the coarse mesh
    is_closed : bool
    """

    vertices: np.ndarray
    triangles: np.ndarray
    face_ids: np.ndarray
    roots: np.ndarray
    is_closed: bool

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @cached_property
    def corners(self):
        """(N, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    @cached_property
    def normals(self):
        c = self.corners
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def areas(self):
        c = self.corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    @cached_property
    def h(self):
        """Element mesh sizes ``h_T = area**0.5``."""
        return np.sqrt(self.areas)

    @cached_property
    def diameters(self):
        c = self.corners
        e = c[:, [1, 2, 0]] - c
        return np.linalg.norm(e, axis=2).max(axis=1)

    @cached_property
    def frames(self):
        """(N, 2, 3) orthonormal in-plane frames; first axis along edge 0."""
        c = self.corners
        t1 = c[:, 1] - c[:, 0]
        t1 /= np.linalg.norm(t1, axis=1)[:, None]
        t2 = np.cross(self.normals, t1)
        return np.stack([t1, t2], axis=1)

    @cached_property
    def skeleton(self):
        return build_skeleton(self)

    @property
    def h_min(self):
        return float(self.h.min())

    @property
    def total_area(self):
        return float(self.areas.sum())

    def shape_regularity(self):
        """Largest ratio diam(T) / (diameter of inscribed circle)."""
        c = self.corners
        lengths = np.linalg.norm(c[:, [1, 2, 0]] - c, axis=2)
        inradius = 2.0 * self.areas / lengths.sum(axis=1)
        return float((lengths.max(axis=1) / (2.0 * inradius)).max())


@dataclass(frozen=True)
class ElementGeometry:
    """Affine map ``x = origin + jacobian @ (xi, eta)`` and derived data."""

    index: int
    corners: np.ndarray
    jacobian: np.ndarray        # (3, 2)
    area: float
    h: float
    normal: np.ndarray
    frame: np.ndarray           # (2, 3), rows t1, t2 = n x t1
    tangents: np.ndarray        # (3, 3) unit tangents of edges k -> k+1
    edge_lengths: np.ndarray

    @property
    def origin(self):
        return self.corners[0]

    @cached_property
    def frame_jacobian(self):
        """Frame coordinates of the reference edge vectors, (2, 2)."""
        return self.frame @ self.jacobian

    @cached_property
    def grad_map(self):
        """Matrix mapping reference gradients to frame-coordinate gradients."""
        return np.linalg.inv(self.frame_jacobian).T

    def map(self, ref_points):
        ref_points = np.asarray(ref_points, dtype=float)
        return self.origin + ref_points @ self.jacobian.T


@dataclass(frozen=True)
class Skeleton:
    """Edges of a mesh with orientation bookkeeping.

    Global edge orientation runs from the lower to the higher vertex index.
    Local edge ``k`` of a triangle runs from local vertex ``k`` to ``k + 1``;
    ``signs[t, k]`` is +1 if that traversal agrees with the global one.
    """

    edges: np.ndarray           # (E, 2), sorted vertex pairs
    tri_edges: np.ndarray       # (N, 3) global edge index of local edge k
    signs: np.ndarray           # (N, 3) in {-1, +1}
    edge_tris: tuple            # per edge: tuple of (triangle, local edge)
    is_boundary: np.ndarray     # (E,) bool
    lengths: np.ndarray         # (E,)
    tangents: np.ndarray        # (E, 3) unit, low -> high vertex

    @property
    def num_edges(self):
        return len(self.edges)


def build_skeleton(mesh):
    tris = mesh.triangles
    index = {}
    edges = []
    incid = []
    tri_edges = np.empty(tris.shape, dtype=np.int64)
    signs = np.empty(tris.shape, dtype=np.int64)
    for t, tri in enumerate(tris):
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (a, b) if a < b else (b, a)
            e = index.get(key)
            if e is None:
                e = index[key] = len(edges)
                edges.append(key)
                incid.append([])
            incid[e].append((t, k))
            tri_edges[t, k] = e
            signs[t, k] = 1 if a < b else -1
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    vec = mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]]
    lengths = np.linalg.norm(vec, axis=1)
    return Skeleton(
        edges=edges,
        tri_edges=tri_edges,
        signs=signs,
        edge_tris=tuple(tuple(i) for i in incid),
        is_boundary=np.array([len(i) == 1 for i in incid]),
        lengths=lengths,
        tangents=vec / lengths[:, None],
    )


def skeleton(mesh):
    """Return the (cached) skeleton of ``mesh``."""
    return mesh.skeleton


def element_geometry(mesh, tri):
    """Geometry of triangle ``tri``; rejects degenerate elements."""
    if not 0 <= tri < mesh.num_triangles:
        raise IndexError(f"triangle index {tri} out of range")
    c = mesh.corners[tri]
    jac = np.column_stack([c[1] - c[0], c[2] - c[0]])
    cr = np.cross(jac[:, 0], jac[:, 1])
    area = 0.5 * np.linalg.norm(cr)
    scale = max(np.linalg.norm(jac[:, 0]), np.linalg.norm(jac[:, 1])) ** 2
    if not area > 1e-14 * scale:
        raise MeshError(f"triangle {tri} is degenerate (area {area:g})")
    normal = cr / (2.0 * area)
    e = c[[1, 2, 0]] - c
    lengths = np.linalg.norm(e, axis=1)
    t1 = e[0] / lengths[0]
    return ElementGeometry(
        index=tri,
        corners=c,
        jacobian=jac,
        area=float(area),
        h=float(np.sqrt(area)),
        normal=normal,
        frame=np.stack([t1, np.cross(normal, t1)]),
        tangents=e / lengths[:, None],
        edge_lengths=lengths,
    )


def _newest_first(vertices, tris):
    """Rotate triangles so the vertex opposite the longest edge comes first.

    Ties go to the lowest opposite-vertex index.  Cyclic rotation keeps the
    orientation.
    """
    out = np.empty_like(tris)
    for i, t in enumerate(tris):
        p = vertices[t]
        # edge opposite local vertex k is (k+1, k+2)
        opp = [np.linalg.norm(p[(k + 2) % 3] - p[(k + 1) % 3]) for k in range(3)]
        longest = max(opp)
        cands = [k for k in range(3) if opp[k] >= longest * (1.0 - 1e-12)]
        k = min(cands, key=lambda k: t[k])
        out[i] = np.roll(t, -k)
    return out


def _orient(vertices, tri, normal):
    p = vertices[list(tri)]
    if np.dot(np.cross(p[1] - p[0], p[2] - p[0]), normal) < 0:
        return [tri[0], tri[2], tri[1]]
    return list(tri)


def build_cube_surface():
    """Boundary of the cube (-1, 1)^3 split into 12 triangles.

    Every face is cut along the diagonal through its lexicographically
    smallest corner.
    """
    vertices = np.array(list(itertools.product([-1.0, 1.0], repeat=3)))
    tris, faces = [], []
    face = 0
    for axis in range(3):
        for side in (-1.0, 1.0):
            ids = [i for i, v in enumerate(vertices) if v[axis] == side]
            ids.sort(key=lambda i: tuple(vertices[i]))
            lo = ids[0]
            hi = max(ids, key=lambda i: np.linalg.norm(vertices[i] - vertices[lo]))
            others = [i for i in ids if i not in (lo, hi)]
            normal = np.zeros(3)
            normal[axis] = side
            for o in others:
                tris.append(_orient(vertices, (lo, o, hi), normal))
                faces.append(face)
            face += 1
    tris = _newest_first(vertices, np.array(tris, dtype=np.int64))
    n = len(tris)
    return SurfaceMesh(vertices, tris, np.array(faces), np.arange(n), True)


def build_square_screen():
    """The square (-1, 1)^2 in the plane z = 0, cut along both diagonals."""
    vertices = np.array([
        [-1.0, -1.0, 0.0],
        [1.0, -1.0, 0.0],
        [1.0, 1.0, 0.0],
        [-1.0, 1.0, 0.0],
        [0.0, 0.0, 0.0],
    ])
    tris = np.array([[4, k, (k + 1) % 4] for k in range(4)], dtype=np.int64)
    tris = _newest_first(vertices, tris)
    return SurfaceMesh(vertices, tris, np.zeros(4, dtype=np.int64), np.arange(4), False)


def single_triangle(corners, closed=False):
    """Mesh made of one triangle (mainly for tests and oracles)."""
    corners = np.asarray(corners, dtype=float)
    return SurfaceMesh(corners.copy(), np.array([[0, 1, 2]]), np.zeros(1, dtype=np.int64),
                       np.zeros(1, dtype=np.int64), closed)


def refine_uniform(mesh):
    """Split every triangle into 4 by two sweeps of newest vertex bisection."""
    vertices = [v for v in mesh.vertices]
    midpoints = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        m = midpoints.get(key)
        if m is None:
            m = midpoints[key] = len(vertices)
            vertices.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        return m

    def bisect(t):
        n, a, b = t
        m = mid(a, b)
        return (m, n, a), (m, b, n)

    # vertex coordinates of first-sweep midpoints are parent-edge midpoints,
    # so ``mid`` can always read from the parent vertex table
    children = []
    for t in mesh.triangles:
        for c in bisect(tuple(int(i) for i in t)):
            children.extend(bisect(c))
    tris = np.array(children, dtype=np.int64)
    return SurfaceMesh(
        np.array(vertices),
        tris,
        np.repeat(mesh.face_ids, 4),
        np.repeat(mesh.roots, 4),
        mesh.is_closed,
    )


def refine(mesh, levels):
    for _ in range(levels):
        mesh = refine_uniform(mesh)
    return mesh


def validate_mesh(mesh):
    """Check the structural invariants of a surface mesh; raise MeshError."""
    if mesh.triangles.ndim != 2 or mesh.triangles.shape[1] != 3:
        raise MeshError("triangles must be an (N, 3) array")
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= mesh.num_vertices:
        raise MeshError("triangle references an unknown vertex")
    for t in range(mesh.num_triangles):
        element_geometry(mesh, t)
    sk = mesh.skeleton
    counts = np.array([len(i) for i in sk.edge_tris])
    if np.any(counts > 2):
        raise MeshError("non-manifold edge with more than two triangles")
    nb = int(np.sum(counts == 1))
    if mesh.is_closed and nb:
        raise MeshError(f"closed mesh has {nb} boundary edges")
    if not mesh.is_closed and nb < 3:
        raise MeshError("open mesh needs at least 3 boundary edges")
    for e, inc in enumerate(sk.edge_tris):
        if len(inc) == 2:
            s = sum(sk.signs[t, k] for t, k in inc)
            if s != 0:
                raise MeshError(f"inconsistent orientation across edge {e}")
    return True


def write_obj(mesh, path):
    """Write the mesh as Wavefront OBJ text (17 significant digits)."""
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write("v {:.17g} {:.17g} {:.17g}\n".format(*v))
        for t in mesh.triangles:
            fh.write("f {} {} {}\n".format(*(t + 1)))
