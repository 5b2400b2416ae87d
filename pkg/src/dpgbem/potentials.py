"""Single-layer potential integrals over flat triangles.

The kernel is ``1 / (4 pi |x - y|)``.  Constant densities have a closed form
(:func:`analytic_deg0`); polynomial densities are integrated numerically with
a Duffy-type polar splitting around the projection of the target point and
geometric grading toward near-singular points (:func:`duffy_moment`).  The
hot loops are compiled with numba.
"""
from dataclasses import dataclass, replace
import math
import warnings

import numba
import numpy as np

from .exceptions import QuadratureError, QuadratureWarning
from .local_fem import poly_basis
from .quadrature import gauss_interval, triangle_rule

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class QuadratureConfig:
    """Orders and thresholds of the singular/near-singular quadrature.

    far_degree : polynomial exactness of the plain triangle rule for far targets
    duffy_order : Gauss points per direction and graded piece in the near field
    near_threshold : targets closer than this many source diameters are "near"
    outer_order : Gauss points per piece of the outer rule along edges
    depth_cap : maximal number of dyadic grading levels
    """

    far_degree: int = 7
    duffy_order: int = 12
    near_threshold: float = 2.0
    outer_order: int = 8
    depth_cap: int = 12

    def __post_init__(self):
        for name in ("far_degree", "duffy_order", "outer_order", "depth_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.near_threshold > 0:
            raise ValueError("near_threshold must be positive")

    @classmethod
    def profile(cls, name):
        if name == "accurate":
            return cls()
        if name == "fast":
            return cls(far_degree=5, duffy_order=5, near_threshold=2.0, outer_order=5,
                       depth_cap=8)
        raise ValueError(f"unknown quadrature profile {name!r}")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class SingleLayerQuery:
    """Polynomial density on a source triangle and a target point.

    ``coeffs`` holds nodal coefficients of the degree-``degree`` Lagrange basis,
    optionally with trailing component axes ``(dim, ncomp)``.
    """

    corners: np.ndarray
    coeffs: np.ndarray
    degree: int
    target: np.ndarray

    def __post_init__(self):
        if not 0 <= self.degree <= 3:
            raise ValueError("density degree must be in 0..3")
        c = np.asarray(self.corners, dtype=float)
        if np.linalg.norm(np.cross(c[1] - c[0], c[2] - c[0])) <= 1e-14 * np.sum((c[1] - c[0]) ** 2):
            raise ValueError("degenerate source triangle")


# ---------------------------------------------------------------- closed form

def analytic_deg0(corners, x):
    """``int_T 1 / (4 pi |x - y|) dy`` for a flat triangle, exact.

    Vectorized over target points ``x`` of shape ``(3,)`` or ``(P, 3)``.
    Uses the edge-wise logarithm/arctangent representation; targets on the
    edges or vertices of ``T`` take the removable-singularity limits.
    """
    p = np.asarray(corners, dtype=float)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    nrm = np.cross(p[1] - p[0], p[2] - p[0])
    scale = np.linalg.norm(p[1] - p[0]) + np.linalg.norm(p[2] - p[1]) + np.linalg.norm(p[0] - p[2])
    nh = nrm / np.linalg.norm(nrm)
    d = (x - p[0]) @ nh
    ad = np.abs(d)
    rho = x - d[:, None] * nh
    tiny = 1e-14 * scale
    total = np.zeros(len(x))
    for i in range(3):
        a, b = p[i], p[(i + 1) % 3]
        L = np.linalg.norm(b - a)
        lh = (b - a) / L
        mh = np.cross(lh, nh)
        sm = (a - rho) @ lh
        sp = (b - rho) @ lh
        t0 = (a - rho) @ mh
        rm = np.linalg.norm(x - a, axis=1)
        rp = np.linalg.norm(x - b, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r0sq = t0 ** 2 + d ** 2
            # r + s without cancellation: r0^2 / (r - s) when s < 0
            up = np.where(sp >= 0, rp + sp, r0sq / (rp - sp))
            lo = np.where(sm >= 0, rm + sm, r0sq / (rm - sm))
            f = np.log(up / lo)
            term = np.where(np.abs(t0) > tiny, t0 * f, 0.0)
            ang = (np.arctan(t0 * sp / (r0sq + ad * rp)) - np.arctan(t0 * sm / (r0sq + ad * rm)))
            term = term - np.where(ad > tiny, ad * ang, 0.0)
        total += term
    total /= FOUR_PI
    if not np.all(np.isfinite(total)):
        raise QuadratureError("non-finite closed-form single-layer value")
    return float(total[0]) if single else total


def analytic_grad_deg0(corners, x):
    """Gradient in ``x`` of :func:`analytic_deg0` for targets off the edges.

    Tangential part: ``-sum_i m_i log(...)``; normal part: solid angle term.
    Only used by tests and oracles.
    """
    p = np.asarray(corners, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nrm = np.cross(p[1] - p[0], p[2] - p[0])
    nh = nrm / np.linalg.norm(nrm)
    d = (x - p[0]) @ nh
    rho = x - d[:, None] * nh
    g = np.zeros_like(x)
    for i in range(3):
        a, b = p[i], p[(i + 1) % 3]
        L = np.linalg.norm(b - a)
        lh = (b - a) / L
        mh = np.cross(lh, nh)
        sm = (a - rho) @ lh
        sp = (b - rho) @ lh
        rm = np.linalg.norm(x - a, axis=1)
        rp = np.linalg.norm(x - b, axis=1)
        f = np.where(sp + sm >= 0, np.log((rp + sp) / (rm + sm)), np.log((rm - sm) / (rp - sp)))
        g -= f[:, None] * mh
    # normal derivative: -sign(d) * solid angle
    r = p[None, :, :] - x[:, None, :]
    rn = np.linalg.norm(r, axis=2)
    trip = np.einsum("pi,pi->p", r[:, 0], np.cross(r[:, 1], r[:, 2]))
    den = (rn[:, 0] * rn[:, 1] * rn[:, 2] + rn[:, 0] * np.einsum("pi,pi->p", r[:, 1], r[:, 2])
           + rn[:, 1] * np.einsum("pi,pi->p", r[:, 0], r[:, 2])
           + rn[:, 2] * np.einsum("pi,pi->p", r[:, 0], r[:, 1]))
    omega = 2.0 * np.arctan2(trip, den)
    g -= (np.abs(omega) * np.sign(d))[:, None] * nh
    return g / FOUR_PI


# ------------------------------------------------------------- numba kernels

@numba.njit(cache=True)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@numba.njit(cache=True)
def _cross(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


@numba.njit(cache=True)
def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@numba.njit(cache=True)
def _graded(center, scale, cap, buf):
    """Sorted breakpoints on [0, 1] graded toward ``center``; returns (n, clamped)."""
    minscale = 2.0 ** (-cap)
    clamped = 0
    if scale < minscale:
        scale = minscale
        clamped = 1
    m = 0
    dd = scale
    while dd < 1.0:
        m += 1
        dd *= 2.0
    n = 0
    buf[n] = 0.0
    n += 1
    for i in range(m - 1, -1, -1):
        q = center - scale * 2.0 ** i
        if q > 0.0:
            buf[n] = q
            n += 1
    if 0.0 < center < 1.0:
        buf[n] = center
        n += 1
    for i in range(m):
        q = center + scale * 2.0 ** i
        if q < 1.0:
            buf[n] = q
            n += 1
    buf[n] = 1.0
    n += 1
    return n, clamped


@numba.njit(cache=True)
def _basis_at(xi, eta, coef, px, py, vals, pw):
    nb, nm = coef.shape
    pw[0, 0] = 1.0
    pw[1, 0] = 1.0
    for k in range(1, pw.shape[1]):
        pw[0, k] = pw[0, k - 1] * xi
        pw[1, k] = pw[1, k - 1] * eta
    for j in range(nb):
        vals[j] = 0.0
    for m in range(nm):
        mono = pw[0, px[m]] * pw[1, py[m]]
        for j in range(nb):
            vals[j] += coef[j, m] * mono


@numba.njit(cache=True)
def _far_moments(x, V, coef, px, py, fx, fw, out):
    e10 = V[1, 0] - V[0, 0]
    e11 = V[1, 1] - V[0, 1]
    e12 = V[1, 2] - V[0, 2]
    e20 = V[2, 0] - V[0, 0]
    e21 = V[2, 1] - V[0, 1]
    e22 = V[2, 2] - V[0, 2]
    c0 = e11 * e22 - e12 * e21
    c1 = e12 * e20 - e10 * e22
    c2 = e10 * e21 - e11 * e20
    a2 = math.sqrt(c0 * c0 + c1 * c1 + c2 * c2)
    nb = coef.shape[0]
    vals = np.empty(nb)
    pw = np.empty((2, 4))
    for q in range(fx.shape[0]):
        xi = fx[q, 0]
        eta = fx[q, 1]
        y0 = V[0, 0] + xi * e10 + eta * e20 - x[0]
        y1 = V[0, 1] + xi * e11 + eta * e21 - x[1]
        y2 = V[0, 2] + xi * e12 + eta * e22 - x[2]
        wt = a2 * fw[q] / (4.0 * math.pi * math.sqrt(y0 * y0 + y1 * y1 + y2 * y2))
        _basis_at(xi, eta, coef, px, py, vals, pw)
        for j in range(nb):
            out[j] += wt * vals[j]


@numba.njit(cache=True)
def _near_moments(x, V, coef, px, py, gx, gw, ux, uw, cap, out):
    """Polar (Duffy) splitting at the projection of ``x`` with graded pieces.

    ``ux, uw`` integrate the radial direction exactly when ``x`` lies in the
    plane of the triangle (the radial integrand is then a polynomial).
    """
    R = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    e1 = V[1] - V[0]
    e2 = V[2] - V[0]
    nrm = _cross(e1, e2)
    a2 = _norm(nrm)
    nh = nrm / a2
    z = _dot(x - V[0], nh)
    if abs(z) <= 1e-14 * math.sqrt(a2):
        z = 0.0
    az = abs(z)
    xb = x - z * nh
    r = xb - V[0]
    g11 = _dot(e1, e1)
    g12 = _dot(e1, e2)
    g22 = _dot(e2, e2)
    det = g11 * g22 - g12 * g12
    b1 = _dot(r, e1)
    b2 = _dot(r, e2)
    xi0 = (g22 * b1 - g12 * b2) / det
    eta0 = (g11 * b2 - g12 * b1) / det
    nb = coef.shape[0]
    vals = np.empty(nb)
    pw = np.empty((2, 4))
    vbuf = np.empty(2 * cap + 8)
    ubuf = np.empty(2 * cap + 8)
    ng = gx.shape[0]
    flags = 0
    for i in range(3):
        i1 = (i + 1) % 3
        P = V[i]
        Q = V[i1]
        s2 = _dot(_cross(P - xb, Q - xb), nh)
        if abs(s2) <= 1e-14 * a2:
            continue
        d0 = Q[0] - P[0]
        d1 = Q[1] - P[1]
        d2 = Q[2] - P[2]
        w00 = P[0] - xb[0]
        w01 = P[1] - xb[1]
        w02 = P[2] - xb[2]
        L2 = d0 * d0 + d1 * d1 + d2 * d2
        L = math.sqrt(L2)
        hp = abs(s2) / L
        lam = -(w00 * d0 + w01 * d1 + w02 * d2) / L2
        vstar = min(max(lam, 0.0), 1.0)
        epsv = math.sqrt(hp * hp + L2 * (lam - vstar) ** 2) / L
        nv, cl = _graded(vstar, epsv, cap, vbuf)
        flags += cl
        rx0 = R[i, 0]
        ry0 = R[i, 1]
        drx = R[i1, 0] - rx0
        dry = R[i1, 1] - ry0
        for pv in range(nv - 1):
            va = vbuf[pv]
            hv = vbuf[pv + 1] - va
            for q in range(ng):
                v = va + hv * gx[q]
                wv = hv * gw[q]
                W0 = w00 + v * d0
                W1 = w01 + v * d1
                W2 = w02 + v * d2
                rho = math.sqrt(W0 * W0 + W1 * W1 + W2 * W2)
                Rx = rx0 + v * drx - xi0
                Ry = ry0 + v * dry - eta0
                if az == 0.0:
                    fac = wv * s2 / (4.0 * math.pi * rho)
                    for qq in range(ux.shape[0]):
                        u = ux[qq]
                        wt = fac * uw[qq]
                        _basis_at(xi0 + u * Rx, eta0 + u * Ry, coef, px, py, vals, pw)
                        for j in range(nb):
                            out[j] += wt * vals[j]
                    continue
                if az < 0.5 * rho:
                    nu, cl = _graded(0.0, az / rho, cap, ubuf)
                    flags += cl
                else:
                    ubuf[0] = 0.0
                    ubuf[1] = 1.0
                    nu = 2
                for pu in range(nu - 1):
                    ua = ubuf[pu]
                    hu = ubuf[pu + 1] - ua
                    for qq in range(ng):
                        u = ua + hu * gx[qq]
                        rr = math.sqrt(u * u * rho * rho + z * z)
                        wt = wv * hu * gw[qq] * s2 * u / (4.0 * math.pi * rr)
                        _basis_at(xi0 + u * Rx, eta0 + u * Ry, coef, px, py, vals, pw)
                        for j in range(nb):
                            out[j] += wt * vals[j]
    return flags


@numba.njit(cache=True)
def _point_segment(p, a, b):
    """Distance from p to segment ab and the segment parameter of the closest point."""
    d = b - a
    L2 = _dot(d, d)
    t = _dot(p - a, d) / L2
    t = min(max(t, 0.0), 1.0)
    return _norm(p - (a + t * d)), t


@numba.njit(cache=True)
def _point_triangle(p, V):
    e1 = V[1] - V[0]
    e2 = V[2] - V[0]
    nrm = _cross(e1, e2)
    nh = nrm / _norm(nrm)
    z = _dot(p - V[0], nh)
    pb = p - z * nh
    inside = True
    for i in range(3):
        a = V[i]
        b = V[(i + 1) % 3]
        if _dot(_cross(b - a, pb - a), nh) < 0.0:
            inside = False
    if inside:
        return abs(z)
    best = 1e300
    for i in range(3):
        dd, t = _point_segment(p, V[i], V[(i + 1) % 3])
        best = min(best, dd)
    return best


@numba.njit(cache=True)
def _segment_segment(p1, q1, p2, q2):
    """Closest distance between segments and the parameter on the first one."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)
    den = a * e - b * b
    if den > 1e-14 * a * e:
        s = min(max((b * f - c * e) / den, 0.0), 1.0)
    else:
        s = 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0)
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0)
    return _norm(p1 + s * d1 - (p2 + t * d2)), s


@numba.njit(cache=True)
def _segment_triangle(a, b, V):
    """Distance between segment ab and triangle V, with a closest parameter on ab."""
    best = _point_triangle(a, V)
    sbest = 0.0
    dd = _point_triangle(b, V)
    if dd < best:
        best = dd
        sbest = 1.0
    for i in range(3):
        dd, s = _segment_segment(a, b, V[i], V[(i + 1) % 3])
        if dd < best:
            best = dd
            sbest = s
    e1 = V[1] - V[0]
    e2 = V[2] - V[0]
    nrm = _cross(e1, e2)
    nh = nrm / _norm(nrm)
    za = _dot(a - V[0], nh)
    zb = _dot(b - V[0], nh)
    if za * zb < 0.0:
        s = za / (za - zb)
        dd = _point_triangle(a + s * (b - a), V)
        if dd < best:
            best = dd
            sbest = s
    return best, sbest


@numba.njit(cache=True)
def _point_moments(x, V, coef, px, py, gx, gw, ux, uw, fx, fw, theta, cap, out):
    """Moments of all basis functions at one target; returns the clamp count."""
    diam = 0.0
    for i in range(3):
        diam = max(diam, _norm(V[(i + 1) % 3] - V[i]))
    if _point_triangle(x, V) > theta * diam:
        _far_moments(x, V, coef, px, py, fx, fw, out)
        return 0
    return _near_moments(x, V, coef, px, py, gx, gw, ux, uw, cap, out)


@numba.njit(cache=True)
def _merge_breaks(bufs, counts, nbuf, work):
    n = 0
    for k in range(nbuf):
        for i in range(counts[k]):
            work[n] = bufs[k, i]
            n += 1
    srt = np.sort(work[:n])
    m = 0
    for i in range(n):
        if m == 0 or srt[i] - work[m - 1] > 1e-14:
            work[m] = srt[i]
            m += 1
    return m


@numba.njit(cache=True)
def _edge_moments(a, b, V, coef, px, py, gx, gw, ux, uw, fx, fw, ox, ow, fox, fow, theta, cap, out):
    """``int_e V[b_j](x) ds`` over segment ab for every basis function b_j."""
    nb = coef.shape[0]
    for j in range(nb):
        out[j] = 0.0
    ab = b - a
    L = _norm(ab)
    diam = 0.0
    for i in range(3):
        diam = max(diam, _norm(V[(i + 1) % 3] - V[i]))
    dist, sstar = _segment_triangle(a, b, V)
    tmp = np.zeros(nb)
    flags = 0
    if dist > theta * diam:
        for q in range(fox.shape[0]):
            x = a + fox[q] * ab
            for j in range(nb):
                tmp[j] = 0.0
            _far_moments(x, V, coef, px, py, fx, fw, tmp)
            for j in range(nb):
                out[j] += L * fow[q] * tmp[j]
        return 0
    size = 2 * cap + 8
    bufs = np.empty((3, size))
    counts = np.zeros(3, dtype=np.int64)
    nbuf = 0
    d0 = _point_triangle(a, V)
    d1 = _point_triangle(b, V)
    if d0 < theta * diam:
        counts[nbuf], cl = _graded(0.0, d0 / L, cap, bufs[nbuf])
        nbuf += 1
    if d1 < theta * diam:
        counts[nbuf], cl = _graded(1.0, d1 / L, cap, bufs[nbuf])
        nbuf += 1
    if 0.0 < sstar < 1.0:
        counts[nbuf], cl = _graded(sstar, dist / L, cap, bufs[nbuf])
        nbuf += 1
    work = np.empty(3 * size)
    if nbuf == 0:
        work[0] = 0.0
        work[1] = 1.0
        nbk = 2
    else:
        nbk = _merge_breaks(bufs, counts, nbuf, work)
    for p in range(nbk - 1):
        sa = work[p]
        hs = work[p + 1] - sa
        for q in range(ox.shape[0]):
            s = sa + hs * ox[q]
            x = a + s * ab
            for j in range(nb):
                tmp[j] = 0.0
            flags += _point_moments(x, V, coef, px, py, gx, gw, ux, uw, fx, fw, theta, cap, tmp)
            for j in range(nb):
                out[j] += L * hs * ow[q] * tmp[j]
    return flags


@numba.njit(cache=True)
def _assemble_curl_block(vertices, tris, edges, edge_tri, edge_sign, tangents, frames,
                         coef, px, py, gx, gw, ux, uw, fx, fw, ox, ow, fox, fow, theta, cap, C):
    """Accumulate ``C[12 S + 6 c + j, T] -= sign * (t_e . f_c^S) * int_e V[b_j]``."""
    ne = edges.shape[0]
    ns = tris.shape[0]
    nb = coef.shape[0]
    J = np.empty(nb)
    V = np.empty((3, 3))
    flags = 0
    for e in range(ne):
        a = vertices[edges[e, 0]]
        b = vertices[edges[e, 1]]
        for s in range(ns):
            for k in range(3):
                V[k] = vertices[tris[s, k]]
            flags += _edge_moments(a, b, V, coef, px, py, gx, gw, ux, uw, fx, fw, ox, ow, fox, fow,
                                   theta, cap, J)
            for c in range(2):
                tf = _dot(tangents[e], frames[s, c])
                for side in range(2):
                    t = edge_tri[e, side]
                    if t < 0:
                        continue
                    fac = edge_sign[e, side] * tf
                    for j in range(nb):
                        C[2 * nb * s + nb * c + j, t] -= fac * J[j]
    return flags


# ------------------------------------------------------------ python surface

def _rules(cfg, degree):
    gx, gw = gauss_interval(cfg.duffy_order)
    ux, uw = gauss_interval(degree // 2 + 1)
    fx, fw = triangle_rule(cfg.far_degree)
    ox, ow = gauss_interval(cfg.outer_order)
    return gx, gw, ux, uw, np.ascontiguousarray(fx), fw, ox, ow


def _basis_arrays(degree):
    b = poly_basis(degree)
    return (np.ascontiguousarray(b.coeffs), b.px.astype(np.int64), b.py.astype(np.int64))


def _warn_clamped(flags):
    if flags:
        warnings.warn(f"graded quadrature reached its depth cap {flags} times",
                      QuadratureWarning, stacklevel=3)


def basis_moments(corners, x, degree, cfg=None):
    """``int_T b_j(y) / (4 pi |x - y|) dy`` for all nodal basis functions b_j."""
    cfg = cfg or QuadratureConfig()
    V = np.ascontiguousarray(corners, dtype=float)
    coef, px, py = _basis_arrays(degree)
    gx, gw, ux, uw, fx, fw, _, _ = _rules(cfg, degree)
    out = np.zeros(coef.shape[0])
    flags = _point_moments(np.asarray(x, dtype=float), V, coef, px, py, gx, gw, ux, uw, fx, fw,
                           float(cfg.near_threshold), int(cfg.depth_cap), out)
    if not np.all(np.isfinite(out)):
        raise QuadratureError("non-finite single-layer moment")
    _warn_clamped(flags)
    return out


def duffy_moment(query, cfg=None):
    """``int_T p(y) / (4 pi |x - y|) dy`` for a polynomial density ``p``."""
    m = basis_moments(query.corners, query.target, query.degree, cfg)
    return np.tensordot(m, np.asarray(query.coeffs, dtype=float), axes=(0, 0))


def _edge_moments_at(a, b, corners, degree, cfg, cap):
    coef, px, py = _basis_arrays(degree)
    gx, gw, ux, uw, fx, fw, ox, ow = _rules(cfg, degree)
    out = np.zeros(coef.shape[0])
    _edge_moments(np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                  np.ascontiguousarray(corners, dtype=float), coef, px, py,
                  gx, gw, ux, uw, fx, fw, ox, ow, ox, ow, float(cfg.near_threshold), int(cap), out)
    if not np.all(np.isfinite(out)):
        raise QuadratureError("non-finite edge potential integral")
    return out


def edge_basis_moments(a, b, corners, degree, cfg=None, check=True):
    """``int_[a,b] V[b_j](x) ds`` for all basis functions of the source triangle.

    With ``check`` the result is compared against a grading two levels
    shallower; a relative change above 1e-6 triggers a QuadratureWarning.
    """
    cfg = cfg or QuadratureConfig()
    out = _edge_moments_at(a, b, corners, degree, cfg, cfg.depth_cap)
    if check and cfg.depth_cap > 2:
        coarse = _edge_moments_at(a, b, corners, degree, cfg, cfg.depth_cap - 2)
        scale = np.abs(out).max()
        if scale > 0 and np.abs(out - coarse).max() > 1e-6 * scale:
            warnings.warn("edge quadrature not converged at the depth cap",
                          QuadratureWarning, stacklevel=2)
    return out


def edge_potential_entry(edge, tangent, sign, source, density, degree, cfg=None):
    """``sign * int_e t . (V density)(x) ds`` for a tangential polynomial density.

    Parameters
    ----------
    edge : (2, 3) endpoints of the target edge
    tangent : unit tangent of the edge
    sign : orientation of the edge relative to ``tangent``
    source : (3, 3) corners of the source triangle
    density : (dim, 3) nodal coefficients of the 3D density vector
    """
    edge = np.asarray(edge, dtype=float)
    m = edge_basis_moments(edge[0], edge[1], source, degree, cfg)
    vec = m @ np.asarray(density, dtype=float)
    return float(sign * np.dot(np.asarray(tangent, dtype=float), vec))


def _triangle_potential(corners, coeffs, pts, cfg):
    dim = len(coeffs)
    degree = {1: 0, 3: 1, 6: 2, 10: 3}[dim]
    if degree == 0:
        return coeffs[0] * analytic_deg0(corners, pts)
    return np.array([basis_moments(corners, p, degree, cfg) @ coeffs for p in pts])


def single_layer_scalar(mesh, densities, x, cfg=None):
    """Scalar potential of piecewise polynomial densities ``(N, dim)`` at points ``x``."""
    densities = np.asarray(densities, dtype=float)
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    out = np.zeros(len(pts))
    for t in range(mesh.num_triangles):
        if np.any(densities[t]):
            out += _triangle_potential(mesh.corners[t], densities[t], pts, cfg)
    return out[0] if x.ndim == 1 else out


def eval_single_layer_field(mesh, densities, x, cfg=None):
    """Componentwise single-layer potential of a tangential vector density.

    ``densities`` has shape ``(N, 2, dim)``: nodal coefficients of the two
    frame components on every triangle.  Returns 3D vectors at ``x``.
    """
    densities = np.asarray(densities, dtype=float)
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    out = np.zeros((len(pts), 3))
    for t in range(mesh.num_triangles):
        for c in range(2):
            if np.any(densities[t, c]):
                pot = _triangle_potential(mesh.corners[t], densities[t, c], pts, cfg)
                out += np.outer(pot, mesh.frames[t, c])
    return out[0] if x.ndim == 1 else out


def assemble_curl_block(mesh, cfg=None, tau_degree=2):
    """Dense block ``C[12 S + 6 c + j, T] = -<1_T, curl V tau_{S,c,j}>``.

    By the tangential-trace identity the entry is
    ``-sum_{e in dT} int_e (V tau) . t_T ds`` with ``t_T`` counterclockwise.
    """
    cfg = cfg or QuadratureConfig()
    sk = mesh.skeleton
    ne = sk.num_edges
    edge_tri = -np.ones((ne, 2), dtype=np.int64)
    edge_sign = np.zeros((ne, 2))
    for e, inc in enumerate(sk.edge_tris):
        for side, (t, k) in enumerate(inc):
            edge_tri[e, side] = t
            edge_sign[e, side] = sk.signs[t, k]
    coef, px, py = _basis_arrays(tau_degree)
    gx, gw, ux, uw, fx, fw, ox, ow = _rules(cfg, tau_degree)
    n = mesh.num_triangles
    C = np.zeros((2 * coef.shape[0] * n, n))
    flags = _assemble_curl_block(
        np.ascontiguousarray(mesh.vertices), mesh.triangles, sk.edges, edge_tri, edge_sign,
        np.ascontiguousarray(sk.tangents), np.ascontiguousarray(mesh.frames), coef, px, py,
        gx, gw, ux, uw, fx, fw, ox, ow, ox, ow, float(cfg.near_threshold), int(cfg.depth_cap), C)
    if not np.all(np.isfinite(C)):
        raise QuadratureError("non-finite entries in the nonlocal block")
    return C
