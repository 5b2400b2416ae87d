"""Normal-equation solve, energy-norm residual and local indicators."""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class TrialCoefficients:
    """Trial vector sliced into ``sigma`` (N, 2), ``phi`` (N,) and ``sigma_hat`` (E,)."""

    layout: object
    u: np.ndarray

    def __post_init__(self):
        if len(self.u) != self.layout.n_trial:
            raise ValueError(f"expected {self.layout.n_trial} coefficients, got {len(self.u)}")

    @property
    def sigma(self):
        return self.u[:self.layout.phi_offset].reshape(-1, 2)

    @property
    def phi(self):
        return self.u[self.layout.phi_offset:self.layout.hat_offset]

    @property
    def sigma_hat(self):
        return self.u[self.layout.hat_offset:]

    @classmethod
    def from_parts(cls, layout, sigma, phi, sigma_hat):
        u = np.concatenate([np.ravel(sigma), np.ravel(phi), np.ravel(sigma_hat)]).astype(float)
        return cls(layout, u)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    energy_error_sq: float
    indicators: np.ndarray = field(repr=False)
    method: str = "cg"


def conjugate_gradient(apply, b, tol=1e-10, max_iter=None, x0=None):
    """Plain CG for an SPD operator; returns ``(x, iterations, rel_residual)``.

    Stops when ``|b - A x| <= tol |b|``.
    """
    n = len(b)
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0, 0.0
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = r @ r
    it = 0
    while np.sqrt(rr) > tol * bnorm and it < max_iter:
        q = apply(p)
        alpha = rr / (p @ q)
        x += alpha * p
        r -= alpha * q
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    return x, it, float(np.sqrt(rr) / bnorm)


def normal_matrix(sys):
    """Dense ``S = B^T G^{-1} B``."""
    B = sys.toarray()
    return B.T @ sys.gram.solve(B)


def solve_normal_equations(sys, tol=1e-10, max_iter=None, method="cg"):
    """Minimize ``(F - B u)^T G^{-1} (F - B u)``.

    ``method`` is ``"cg"`` (unpreconditioned conjugate gradients on the normal
    equations) or ``"dense"`` (Cholesky of ``S``; at most 2000 unknowns).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    lay = sys.layout
    rhs = sys.rmatvec(sys.gram.solve(sys.load))
    if method == "cg":
        u, it, res = conjugate_gradient(sys.normal_matvec, rhs, tol, max_iter)
        converged = res <= tol
    elif method == "dense":
        if lay.n_trial > DENSE_LIMIT:
            raise ValueError(f"dense solve limited to {DENSE_LIMIT} unknowns")
        S = normal_matrix(sys)
        u = sla.cho_solve(sla.cho_factor(S), rhs)
        it = 0
        nb = np.linalg.norm(rhs)
        res = float(np.linalg.norm(rhs - S @ u) / nb) if nb > 0 else 0.0
        converged = True
    else:
        raise ValueError(f"unknown method {method!r}")
    coeffs = TrialCoefficients(lay, u)
    ind = local_indicators(sys, coeffs)
    return coeffs, SolveReport(it, res, converged, float(ind.sum()), ind, method)


def _vector(u):
    return u.u if isinstance(u, TrialCoefficients) else np.asarray(u, dtype=float)


def energy_error_sq(sys, u):
    """``r^T G^{-1} r`` with ``r = F - B u``."""
    r = sys.residual(_vector(u))
    return float(r @ sys.gram.solve(r))


def local_indicators(sys, u):
    """Per-element contributions ``r_T^T G_T^{-1} r_T``; they sum to the energy error."""
    r = sys.residual(_vector(u))
    return np.maximum(sys.gram.block_norms_sq(r), 0.0)


def trial_to_test(sys, index):
    """Optimal test function ``G^{-1} B e_index`` of a trial basis function."""
    e = np.zeros(sys.layout.n_trial)
    e[index] = 1.0
    return sys.gram.solve(sys.matvec(e))
