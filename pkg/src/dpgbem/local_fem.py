"""Reference-triangle polynomial bases and element-local forms."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import MeshError
from .quadrature import gauss_interval, triangle_gauss

MAX_DEGREE = 4


def _lattice(k):
    """Lattice nodes of degree ``k``: vertices, then edge nodes, then interior."""
    if k == 0:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]])
    pts = [(i / k, j / k) for j in range(k + 1) for i in range(k + 1 - j)]
    verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    rest = [p for p in pts if p not in verts]
    on_edge = [p for p in rest if p[0] == 0 or p[1] == 0 or abs(p[0] + p[1] - 1) < 1e-12]
    inner = [p for p in rest if p not in on_edge]
    return np.array(verts + on_edge + inner)


@dataclass(frozen=True, eq=False)
class PolyBasis:
    """Nodal Lagrange basis of total degree ``degree`` on the reference triangle.

    ``coeffs[j, m]`` is the coefficient of monomial ``xi**px[m] * eta**py[m]``
    in basis function ``j``.
    """

    degree: int
    nodes: np.ndarray
    px: np.ndarray
    py: np.ndarray
    coeffs: np.ndarray

    @property
    def dim(self):
        return (self.degree + 1) * (self.degree + 2) // 2

    def eval(self, points):
        """Values ``(P, dim)`` at reference points ``(P, 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mono = pts[:, :1] ** self.px * pts[:, 1:] ** self.py
        return mono @ self.coeffs.T

    def grad(self, points):
        """Reference gradients ``(P, dim, 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x, y = pts[:, :1], pts[:, 1:]
        px, py = self.px, self.py
        dx = np.where(px > 0, px * x ** np.maximum(px - 1, 0), 0.0) * y ** py
        dy = np.where(py > 0, py * y ** np.maximum(py - 1, 0), 0.0) * x ** px
        return np.stack([dx @ self.coeffs.T, dy @ self.coeffs.T], axis=-1)


@lru_cache(maxsize=None)
def poly_basis(degree):
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"unsupported polynomial degree {degree} (0..{MAX_DEGREE})")
    px, py = zip(*[(i, j) for j in range(degree + 1) for i in range(degree + 1 - j)])
    px, py = np.array(px), np.array(py)
    nodes = _lattice(degree)
    vander = nodes[:, :1] ** px * nodes[:, 1:] ** py
    coeffs = np.linalg.inv(vander).T
    return PolyBasis(degree, nodes, px, py, coeffs)


def eval_basis(degree, points):
    """Basis values and reference gradients at ``points``."""
    b = poly_basis(degree)
    return b.eval(points), b.grad(points)


def surface_curl_scalar(grad, normal):
    """Vector surface curl ``-n x grad v`` of a scalar with surface gradient ``grad``."""
    return -np.cross(normal, grad)


def surface_curl_vector(dsigma):
    """Scalar surface curl of a tangential field on a flat element.

    ``dsigma[..., i, k]`` is the derivative of frame component ``i`` along
    frame direction ``k``; the result is ``d1 s2 - d2 s1``.
    """
    dsigma = np.asarray(dsigma, dtype=float)
    return dsigma[..., 1, 0] - dsigma[..., 0, 1]


def frame_curl(grad_frame):
    """``curl v`` in frame coordinates from frame gradients ``(..., 2)``."""
    return np.stack([grad_frame[..., 1], -grad_frame[..., 0]], axis=-1)


@dataclass(frozen=True)
class LocalGramBlock:
    """Test inner product restricted to one element.

    ``tau_block`` acts on the vector field (two frame components times the
    scalar basis), ``v_block`` on the scalar H1 part.
    """

    element: int
    tau_block: np.ndarray
    v_block: np.ndarray
    tau_factor: tuple
    v_factor: tuple

    @property
    def matrix(self):
        n1, n2 = len(self.tau_block), len(self.v_block)
        g = np.zeros((n1 + n2, n1 + n2))
        g[:n1, :n1] = self.tau_block
        g[n1:, n1:] = self.v_block
        return g

    def solve(self, rhs):
        n1 = len(self.tau_block)
        rhs = np.asarray(rhs, dtype=float)
        return np.concatenate([cho_solve(self.tau_factor, rhs[:n1]),
                               cho_solve(self.v_factor, rhs[n1:])])


@lru_cache(maxsize=None)
def _reference_mass(degree):
    b = poly_basis(degree)
    pts, w = triangle_gauss(2 * degree + 1)
    vals = b.eval(pts)
    return 2.0 * (vals.T * w) @ vals        # scaled by area later


def local_gram(geom, tau_degree=2, v_degree=3):
    """Gram block of ``<tau, dtau> + <v, dv> + <curl v, curl dv>`` on one element."""
    mass_t = geom.area * _reference_mass(tau_degree)
    tau_block = np.kron(np.eye(2), mass_t)
    b = poly_basis(v_degree)
    pts, w = triangle_gauss(2 * v_degree + 1)
    vals = b.eval(pts)
    g = b.grad(pts) @ geom.grad_map.T                    # (P, dim, 2) frame gradients
    w = 2.0 * geom.area * w
    v_block = (vals.T * w) @ vals + np.einsum("q,qik,qjk->ij", w, g, g)
    tau_block = 0.5 * (tau_block + tau_block.T)
    v_block = 0.5 * (v_block + v_block.T)
    try:
        tf = cho_factor(tau_block)
        vf = cho_factor(v_block)
    except np.linalg.LinAlgError as exc:
        raise MeshError(f"Gram block of element {geom.index} is not SPD") from exc
    return LocalGramBlock(geom.index, tau_block, v_block, tf, vf)


def edge_reference_points(k, t):
    """Reference coordinates of points at parameters ``t`` on local edge ``k``."""
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    a, b = ref[k], ref[(k + 1) % 3]
    t = np.asarray(t, dtype=float)
    return a + t[:, None] * (b - a)


def edge_jump_pairing(mesh, skel, edge, tri, v_basis, order=4):
    """``sign(T, e) * int_e v_j ds`` for every basis function ``v_j`` of ``tri``."""
    ks = np.nonzero(skel.tri_edges[tri] == edge)[0]
    if len(ks) == 0:
        raise ValueError(f"edge {edge} is not on the boundary of triangle {tri}")
    k = int(ks[0])
    t, w = gauss_interval(order)
    vals = v_basis.eval(edge_reference_points(k, t))
    return skel.signs[tri, k] * skel.lengths[edge] * (w @ vals)
