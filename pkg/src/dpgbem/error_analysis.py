"""L2 errors of discrete solutions against a manufactured exact solution."""
import numpy as np

from .assembly import map_points
from .quadrature import gauss_interval, triangle_rule
from .solver import TrialCoefficients


def _phi_values(u):
    return u.phi if isinstance(u, TrialCoefficients) else np.asarray(u, dtype=float)


def l2_error_phi(mesh, u, exact, degree=5):
    """``(sum_T int_T (phi - phi_T)^2)^(1/2)`` for piecewise-constant ``phi_T``.

    ``u`` is a :class:`TrialCoefficients` or the per-triangle values directly.
    """
    phi_h = _phi_values(u)
    pts, w = triangle_rule(degree)
    phys = map_points(mesh.corners, pts)
    roots = np.repeat(mesh.roots, len(w))
    ex = exact.phi(phys.reshape(-1, 3), roots).reshape(mesh.num_triangles, len(w))
    err = (ex - phi_h[:, None]) ** 2
    return float(np.sqrt(np.sum(2.0 * mesh.areas[:, None] * w * err)))


def sigma_at_triangle_points(mesh, exact, degree=5):
    """Frame components ``(N, P, 2)`` of the exact field at triangle quadrature points."""
    pts, w = triangle_rule(degree)
    phys = map_points(mesh.corners, pts)
    sig = exact.sigma(phys.reshape(-1, 3)).reshape(mesh.num_triangles, len(w), 3)
    return np.einsum("npi,nci->npc", sig, mesh.frames), w


def l2_error_sigma(mesh, u, exact, degree=5, cache=None):
    """L2 error of the tangential part of ``sigma`` against the piecewise-constant ``sigma_hp``.

    ``cache`` may hold the output of :func:`sigma_at_triangle_points` to avoid
    re-evaluating the potential.
    """
    sig, w = cache if cache is not None else sigma_at_triangle_points(mesh, exact, degree)
    s_h = u.sigma if isinstance(u, TrialCoefficients) else np.asarray(u, dtype=float)
    err = np.sum((sig - s_h[:, None, :]) ** 2, axis=2)
    return float(np.sqrt(np.sum(2.0 * mesh.areas[:, None] * w * err)))


def l2_error_sigma_hat(mesh, u, exact, order=4):
    """``(sum_e int_e (sigma . t_e - sigma_hat_e)^2 ds)^(1/2)``."""
    sk = mesh.skeleton
    h = u.sigma_hat if isinstance(u, TrialCoefficients) else np.asarray(u, dtype=float)
    gt, gw = gauss_interval(order)
    a = mesh.vertices[sk.edges[:, 0]]
    b = mesh.vertices[sk.edges[:, 1]]
    pts = a[:, None] + gt[None, :, None] * (b - a)[:, None]
    tan = np.repeat(sk.tangents, len(gt), axis=0)
    ex = exact.sigma_hat(pts.reshape(-1, 3), tan).reshape(len(a), len(gt))
    err = (ex - h[:, None]) ** 2
    return float(np.sqrt(np.sum(sk.lengths[:, None] * gw * err)))
