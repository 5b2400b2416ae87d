"""Dof layouts, the rectangular DPG matrix, the block Gram matrix and loads."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import LoadError
from .local_fem import edge_reference_points, local_gram, poly_basis
from .mesh import element_geometry
from .potentials import QuadratureConfig, analytic_deg0, assemble_curl_block
from .quadrature import gauss_interval, graded_interval, graded_triangle, triangle_rule


@dataclass(frozen=True)
class DofLayout:
    """Index maps of trial and test degrees of freedom.

    Trial vector: ``[sigma (2 per triangle) | phi (1 per triangle) | sigma_hat (1 per edge)]``.
    Test vector: one contiguous block of ``n_tau + n_v`` entries per triangle,
    the vector field first (component 0, then component 1), then the scalar.
    """

    num_triangles: int
    num_edges: int
    tau_degree: int = 2
    v_degree: int = 3

    @classmethod
    def for_mesh(cls, mesh, degree_increment=2):
        if degree_increment not in (1, 2, 3):
            raise ValueError("degree increment must be 1, 2 or 3")
        return cls(mesh.num_triangles, mesh.skeleton.num_edges,
                   degree_increment, degree_increment + 1)

    @property
    def tau_dim(self):
        return (self.tau_degree + 1) * (self.tau_degree + 2) // 2

    @property
    def n_tau(self):
        return 2 * self.tau_dim

    @property
    def n_v(self):
        return (self.v_degree + 1) * (self.v_degree + 2) // 2

    @property
    def block(self):
        return self.n_tau + self.n_v

    @property
    def n_test(self):
        return self.block * self.num_triangles

    @property
    def n_trial(self):
        return 3 * self.num_triangles + self.num_edges

    @property
    def phi_offset(self):
        return 2 * self.num_triangles

    @property
    def hat_offset(self):
        return 3 * self.num_triangles

    def sigma_dofs(self, tri):
        return np.array([2 * tri, 2 * tri + 1])

    def phi_dof(self, tri):
        return self.phi_offset + tri

    def hat_dof(self, edge):
        return self.hat_offset + edge

    def tau_dofs(self, tri):
        return self.block * tri + np.arange(self.n_tau)

    def v_dofs(self, tri):
        return self.block * tri + self.n_tau + np.arange(self.n_v)


@dataclass(frozen=True, eq=False)
class BlockGram:
    """Block-diagonal test Gram matrix with explicit block inverses."""

    blocks: tuple
    matrices: np.ndarray        # (N, n, n)
    inverses: np.ndarray        # (N, n, n)

    @property
    def num_blocks(self):
        return len(self.blocks)

    @property
    def dim(self):
        return self.matrices.shape[0] * self.matrices.shape[1]

    def apply(self, x):
        n, b, _ = self.matrices.shape
        x = np.asarray(x, dtype=float)
        return np.einsum("kij,kj...->ki...", self.matrices,
                         x.reshape(n, b, *x.shape[1:])).reshape(x.shape)

    def solve(self, x):
        n, b, _ = self.inverses.shape
        x = np.asarray(x, dtype=float)
        return np.einsum("kij,kj...->ki...", self.inverses,
                         x.reshape(n, b, *x.shape[1:])).reshape(x.shape)

    def block_norms_sq(self, r):
        """``r_T^T G_T^{-1} r_T`` for every block."""
        n, b, _ = self.inverses.shape
        rr = np.asarray(r, dtype=float).reshape(n, b)
        return np.einsum("ki,kij,kj->k", rr, self.inverses, rr)

    def toarray(self):
        return sp.block_diag(list(self.matrices)).toarray()


def assemble_gram(mesh, layout):
    """Factorized per-element blocks of the test inner product."""
    blocks = tuple(local_gram(element_geometry(mesh, t), layout.tau_degree, layout.v_degree)
                   for t in range(mesh.num_triangles))
    mats = np.array([b.matrix for b in blocks])
    inv = np.linalg.inv(mats)
    inv = 0.5 * (inv + inv.transpose(0, 2, 1))
    return BlockGram(blocks, mats, inv)


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """The DPG matrix ``B`` (implicitly), the Gram matrix and the load.

    ``B = local + [tau rows] curl_block [phi cols] + mass_v (x) areas``; the
    last term is present on closed surfaces only.
    """

    layout: DofLayout
    local: sp.csr_matrix
    curl_block: np.ndarray          # (N * n_tau, N)
    rank_one: tuple                 # (test vector, phi weights) or None
    gram: BlockGram
    load: np.ndarray

    def _tau_rows(self, y):
        lay = self.layout
        return y.reshape(lay.num_triangles, lay.block)[:, :lay.n_tau]

    def matvec(self, u):
        lay = self.layout
        u = np.asarray(u, dtype=float)
        y = self.local @ u
        phi = u[lay.phi_offset:lay.hat_offset]
        yy = y.reshape(lay.num_triangles, lay.block)
        yy[:, :lay.n_tau] += (self.curl_block @ phi).reshape(lay.num_triangles, lay.n_tau)
        if self.rank_one is not None:
            w, a = self.rank_one
            y += w * (a @ phi)
        return y

    def rmatvec(self, r):
        lay = self.layout
        r = np.asarray(r, dtype=float)
        out = self.local.T @ r
        phi = self.curl_block.T @ self._tau_rows(r).reshape(-1)
        if self.rank_one is not None:
            w, a = self.rank_one
            phi += a * (w @ r)
        out[lay.phi_offset:lay.hat_offset] += phi
        return out

    def gram_solve(self, x):
        return self.gram.solve(x)

    def normal_matvec(self, u):
        return self.rmatvec(self.gram.solve(self.matvec(u)))

    def residual(self, u):
        return self.load - self.matvec(u)

    def toarray(self):
        """Dense ``B``; only sensible for small meshes."""
        lay = self.layout
        eye = np.eye(lay.n_trial)
        return np.column_stack([self.matvec(eye[:, j]) for j in range(lay.n_trial)])

    def with_load(self, load):
        return SystemMatrices(self.layout, self.local, self.curl_block, self.rank_one,
                              self.gram, np.asarray(load, dtype=float))

    def dump_coo(self, path):
        """Write nonzeros of ``B`` as ``row col value`` lines."""
        B = sp.coo_matrix(self.toarray())
        with open(path, "w") as fh:
            for i, j, v in zip(B.row, B.col, B.data):
                fh.write(f"{i} {j} {v:.17g}\n")


def _reference_tables(layout, degree=None):
    tb = poly_basis(layout.tau_degree)
    vb = poly_basis(layout.v_degree)
    pts, w = triangle_rule(degree or 2 * layout.v_degree + 2)
    return tb, vb, pts, 2.0 * w


def _local_entries(mesh, layout):
    """Rows, columns and values of the sparse local part of ``B``."""
    sk = mesh.skeleton
    tb, vb, pts, w = _reference_tables(layout)
    tau_int = w @ tb.eval(pts)                       # int over reference / area
    vgrad = vb.grad(pts)                             # (P, nv, 2)
    gt, gl = gauss_interval(layout.v_degree + 2)
    rows, cols, vals = [], [], []
    for t in range(mesh.num_triangles):
        g = element_geometry(mesh, t)
        trow = layout.tau_dofs(t)
        vrow = layout.v_dofs(t)
        sd = layout.sigma_dofs(t)
        # <sigma, tau>
        for c in range(2):
            r = trow[c * layout.tau_dim:(c + 1) * layout.tau_dim]
            rows.append(r)
            cols.append(np.full(layout.tau_dim, sd[c]))
            vals.append(g.area * tau_int)
        # <sigma, curl v> with curl v = (d2 v, -d1 v) in frame coordinates
        fg = vgrad @ g.grad_map.T
        curl_int = g.area * np.einsum("q,qjk->jk", w, fg)
        rows += [vrow, vrow]
        cols += [np.full(layout.n_v, sd[0]), np.full(layout.n_v, sd[1])]
        vals += [curl_int[:, 1], -curl_int[:, 0]]
        # <sigma_hat, [v]>
        for k in range(3):
            e = sk.tri_edges[t, k]
            vv = vb.eval(edge_reference_points(k, gt))
            rows.append(vrow)
            cols.append(np.full(layout.n_v, layout.hat_dof(e)))
            vals.append(sk.signs[t, k] * sk.lengths[e] * (gl @ vv))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def v_integrals(mesh, layout):
    """Test-space vector with entries ``int_T v_j`` (zero on vector-field rows)."""
    vb = poly_basis(layout.v_degree)
    pts, w = triangle_rule(layout.v_degree + 1)
    ref = 2.0 * (w @ vb.eval(pts))
    out = np.zeros((mesh.num_triangles, layout.block))
    out[:, layout.n_tau:] = mesh.areas[:, None] * ref
    return out.reshape(-1)


def assemble_B(mesh, layout, cfg=None, load=None):
    """Assemble ``B`` and the Gram matrix into a :class:`SystemMatrices`."""
    cfg = cfg or QuadratureConfig.profile("fast")
    r, c, v = _local_entries(mesh, layout)
    local = sp.csr_matrix((v, (r, c)), shape=(layout.n_test, layout.n_trial))
    local.sum_duplicates()
    curl = assemble_curl_block(mesh, cfg, layout.tau_degree)
    rank_one = (v_integrals(mesh, layout), mesh.areas.copy()) if mesh.is_closed else None
    gram = assemble_gram(mesh, layout)
    if load is None:
        load = np.zeros(layout.n_test)
    return SystemMatrices(layout, local, curl, rank_one, gram, np.asarray(load, dtype=float))


def assemble_load_analytic(mesh, layout, f, degree=8):
    """Load vector ``F_v = int_T f v_j``, ``F_tau = 0`` for a callable ``f(points)``.

    On closed surfaces ``f`` must have vanishing mean.
    """
    vb = poly_basis(layout.v_degree)
    pts, w = triangle_rule(degree)
    vals = vb.eval(pts)
    c = mesh.corners
    phys = c[:, None, 0] + pts[None, :, :1] * (c[:, None, 1] - c[:, None, 0]) \
        + pts[None, :, 1:] * (c[:, None, 2] - c[:, None, 0])
    fv = np.asarray(f(phys.reshape(-1, 3)), dtype=float).reshape(mesh.num_triangles, -1)
    if not np.all(np.isfinite(fv)):
        raise LoadError("right-hand side is not finite at quadrature points")
    wa = 2.0 * mesh.areas[:, None] * w[None, :]
    if mesh.is_closed:
        mean = np.sum(wa * fv)
        norm = np.sqrt(np.sum(wa * fv ** 2))
        if abs(mean) > 1e-10 * max(norm, 1e-300) * mesh.total_area:
            raise LoadError(f"right-hand side on a closed surface must have zero mean "
                            f"(got {mean:.3e})")
    F = np.zeros((mesh.num_triangles, layout.block))
    F[:, layout.n_tau:] = (wa * fv) @ vals
    return F.reshape(-1)


class ExactSolution:
    """Manufactured solution from a continuous piecewise-affine ``phi`` on a coarse mesh.

    ``phi`` is given by its values at the coarse vertices.  Then
    ``sigma = V curl phi`` (componentwise single-layer potential of the
    piecewise-constant surface curl), and ``sigma_hat = sigma . t`` on edges.
    """

    def __init__(self, coarse, nodal_values):
        self.coarse = coarse
        self.nodal_values = np.asarray(nodal_values, dtype=float)
        if self.nodal_values.shape != (coarse.num_vertices,):
            raise ValueError("one nodal value per coarse vertex is required")
        c = coarse.corners
        vals = self.nodal_values[coarse.triangles]
        curls = []
        for t in range(coarse.num_triangles):
            jac = np.column_stack([c[t, 1] - c[t, 0], c[t, 2] - c[t, 0]])
            grad = np.linalg.pinv(jac).T @ (vals[t, 1:] - vals[t, 0])
            curls.append(-np.cross(coarse.normals[t], grad))
        self.curl_phi = np.array(curls)            # (N0, 3)

    @property
    def is_zero(self):
        return not np.any(self.nodal_values)

    def phi(self, points, roots):
        """Values at ``points`` lying in the coarse triangles ``roots``."""
        points = np.atleast_2d(points)
        roots = np.broadcast_to(np.asarray(roots), (len(points),))
        c = self.coarse.corners[roots]
        vals = self.nodal_values[self.coarse.triangles[roots]]
        e1, e2, r = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0], points - c[:, 0]
        g11, g12, g22 = (e1 * e1).sum(1), (e1 * e2).sum(1), (e2 * e2).sum(1)
        b1, b2 = (r * e1).sum(1), (r * e2).sum(1)
        det = g11 * g22 - g12 * g12
        xi = (g22 * b1 - g12 * b2) / det
        eta = (g11 * b2 - g12 * b1) / det
        return vals[:, 0] + xi * (vals[:, 1] - vals[:, 0]) + eta * (vals[:, 2] - vals[:, 0])

    def sigma(self, points):
        """``V curl phi`` as 3D vectors at ``points`` (P, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((len(points), 3))
        for t in range(self.coarse.num_triangles):
            if np.any(self.curl_phi[t]):
                out += np.outer(analytic_deg0(self.coarse.corners[t], points), self.curl_phi[t])
        return out

    def sigma_hat(self, points, tangents):
        return np.einsum("pi,pi->p", self.sigma(points), np.atleast_2d(tangents))


def map_points(corners, ref):
    """Physical points ``(N, P, 3)`` of reference points ``(P, 2)`` on all triangles."""
    c = np.asarray(corners)
    return c[:, None, 0] + ref[None, :, :1] * (c[:, None, 1] - c[:, None, 0]) \
        + ref[None, :, 1:] * (c[:, None, 2] - c[:, None, 0])


def skeleton_contact(mesh, coarse, tol=1e-10):
    """Which vertices and edges of each triangle lie on the boundary of its coarse ancestor.

    The manufactured field has log-type derivative singularities exactly
    there.  Returns boolean arrays ``(N, 3)`` for vertices and local edges.
    """
    c = coarse.corners[mesh.roots]                     # (N, 3, 3)
    e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
    g11 = np.einsum("ni,ni->n", e1, e1)
    g12 = np.einsum("ni,ni->n", e1, e2)
    g22 = np.einsum("ni,ni->n", e2, e2)
    det = g11 * g22 - g12 * g12
    r = mesh.corners - c[:, None, 0]
    b1 = np.einsum("nki,ni->nk", r, e1)
    b2 = np.einsum("nki,ni->nk", r, e2)
    xi = (g22[:, None] * b1 - g12[:, None] * b2) / det[:, None]
    eta = (g11[:, None] * b2 - g12[:, None] * b1) / det[:, None]
    lam = np.stack([1.0 - xi - eta, xi, eta], axis=2)   # (N, 3 vertices, 3 coords)
    zero = np.abs(lam) <= tol
    on_vertex = zero.any(axis=2)
    on_edge = (zero & zero[:, [1, 2, 0]]).any(axis=2)
    return on_vertex, on_edge


def assemble_load_manufactured(mesh, layout, exact, levels=8, order=6):
    """Load ``F_v = <sigma, curl v_j>_T + sum_e int_e (sigma . t_T) v_j``, ``F_tau = 0``.

    Triangle and edge rules are graded toward points of the coarse skeleton,
    where ``sigma`` is only ``d log d`` smooth.
    """
    F = np.zeros((mesh.num_triangles, layout.block))
    if exact.is_zero:
        return F.reshape(-1)
    vb = poly_basis(layout.v_degree)
    sk = mesh.skeleton
    on_vertex, on_edge = skeleton_contact(mesh, exact.coarse)
    groups = {}
    for t in range(mesh.num_triangles):
        groups.setdefault((tuple(on_edge[t]), tuple(on_vertex[t])), []).append(t)
    for (edges, verts), tris in groups.items():
        pts, w = graded_triangle(edges, verts, levels, order)
        tris = np.array(tris)
        phys = map_points(mesh.corners[tris], pts)
        sig = exact.sigma(phys.reshape(-1, 3)).reshape(len(tris), len(w), 3)
        vgrad = vb.grad(pts)
        for i, t in enumerate(tris):
            g = element_geometry(mesh, t)
            sf = sig[i] @ g.frame.T                       # frame components (P, 2)
            fg = vgrad @ g.grad_map.T                     # (P, nv, 2)
            curl = np.stack([fg[..., 1], -fg[..., 0]], axis=-1)
            F[t, layout.n_tau:] += 2.0 * g.area * np.einsum("q,qk,qjk->j", w, sf, curl)
    # edge terms; sigma . t_E evaluated once per global edge point
    vflag = np.zeros(mesh.num_vertices, dtype=bool)
    np.logical_or.at(vflag, mesh.triangles.ravel(), on_vertex.ravel())
    for e in range(sk.num_edges):
        a, b = mesh.vertices[sk.edges[e]]
        gt, gw = graded_interval(bool(vflag[sk.edges[e, 0]]), bool(vflag[sk.edges[e, 1]]),
                                 levels, order)
        st = exact.sigma(a + gt[:, None] * (b - a)) @ sk.tangents[e]
        for t, k in sk.edge_tris[e]:
            s = sk.signs[t, k]
            tl = gt if s > 0 else 1.0 - gt
            vv = vb.eval(edge_reference_points(k, tl))
            F[t, layout.n_tau:] += s * sk.lengths[e] * ((gw * st) @ vv)
    return F.reshape(-1)


def cube_product_values(mesh):
    """Nodal values ``x * y * z`` (mean zero on the cube surface)."""
    v = mesh.vertices
    return v[:, 0] * v[:, 1] * v[:, 2]


def screen_hat_values(mesh):
    """Nodal values of the hat function: 1 at interior vertices, 0 on the boundary."""
    sk = mesh.skeleton
    vals = np.ones(mesh.num_vertices)
    vals[np.unique(sk.edges[sk.is_boundary])] = 0.0
    return vals
