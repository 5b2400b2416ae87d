import numpy as np
import pytest

from dpgbem.assembly import DofLayout, SystemMatrices, assemble_load_analytic
from dpgbem.experiments import ExperimentConfig, solve_level
from dpgbem.mesh import refine
from dpgbem.solver import (TrialCoefficients, conjugate_gradient, energy_error_sq,
                           local_indicators, normal_matrix, solve_normal_equations,
                           trial_to_test)


def with_random_load(sys, rng):
    lay = sys.layout
    F = rng.standard_normal((lay.num_triangles, lay.block))
    F[:, :lay.n_tau] = 0.0
    return sys.with_load(F.ravel())


@pytest.mark.parametrize("key", [("cube", 0), ("screen", 0), ("screen", 1)])
def test_zero_load_gives_zero(systems, key):
    _, sys = systems[key]
    u, rep = solve_normal_equations(sys)
    assert np.all(u.u == 0.0)
    assert rep.iterations == 0
    assert rep.energy_error_sq == 0.0


@pytest.mark.parametrize("name", ["cube", "screen"])
def test_normal_matrix_spd(systems, name):
    _, sys = systems[name, 0]
    S = normal_matrix(sys)
    assert np.abs(S - S.T).max() <= 1e-10 * np.abs(S).max()
    assert np.linalg.eigvalsh(0.5 * (S + S.T)).min() > 0


@pytest.mark.parametrize("key", [("cube", 0), ("screen", 1)])
def test_cg_stopping_criterion_and_dense_agreement(systems, key, rng):
    _, sys = systems[key]
    sys = with_random_load(sys, rng)
    u, rep = solve_normal_equations(sys, tol=1e-10)
    assert rep.converged
    rhs = sys.rmatvec(sys.gram.solve(sys.load))
    res = rhs - sys.normal_matvec(u.u)
    assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(rhs)
    ud, _ = solve_normal_equations(sys, method="dense")
    np.testing.assert_allclose(u.u, ud.u, rtol=0, atol=1e-7 * np.abs(ud.u).max())


def test_solver_rejects_bad_arguments(systems):
    _, sys = systems["screen", 0]
    with pytest.raises(ValueError):
        solve_normal_equations(sys, tol=0.0)
    with pytest.raises(ValueError):
        solve_normal_equations(sys, method="gmres")


def test_max_iter_reports_non_convergence(systems, rng):
    _, sys = systems["screen", 1]
    sys = with_random_load(sys, rng)
    _, rep = solve_normal_equations(sys, max_iter=3)
    assert rep.iterations == 3
    assert not rep.converged


@pytest.mark.parametrize("key", [("cube", 1), ("screen", 1)])
def test_minimum_residual_property(systems, key, rng):
    _, sys = systems[key]
    sys = with_random_load(sys, rng)
    u, rep = solve_normal_equations(sys)
    e0 = energy_error_sq(sys, u)
    assert e0 == pytest.approx(rep.energy_error_sq, rel=1e-10)
    for _ in range(20):
        d = rng.standard_normal(len(u.u)) * 1e-3
        assert energy_error_sq(sys, u.u + d) > e0


def test_exact_data_gives_zero_error(systems, rng):
    _, sys = systems["screen", 1]
    u = rng.standard_normal(sys.layout.n_trial)
    sys = sys.with_load(sys.matvec(u))
    assert energy_error_sq(sys, u) <= 1e-24 * (sys.load @ sys.load)
    np.testing.assert_allclose(local_indicators(sys, u), 0.0, atol=1e-20)


@pytest.mark.parametrize("key", [("cube", 1), ("screen", 1)])
def test_indicators_sum_to_total(systems, key, rng):
    _, sys = systems[key]
    sys = with_random_load(sys, rng)
    u = rng.standard_normal(sys.layout.n_trial)
    ind = local_indicators(sys, u)
    assert np.all(ind >= 0)
    assert ind.sum() == pytest.approx(energy_error_sq(sys, u), rel=1e-10)


def test_trial_to_test_identities(systems):
    mesh, sys = systems["screen", 1]
    lay = sys.layout
    S = normal_matrix(sys)
    idx = [0, 5, lay.phi_offset + 3, lay.hat_offset + 2, lay.n_trial - 1]
    thetas = {i: trial_to_test(sys, i) for i in idx}
    for i in idx:
        for j in idx:
            val = thetas[i] @ sys.gram.apply(thetas[j])
            assert val == pytest.approx(S[i, j], rel=1e-12, abs=1e-12 * np.abs(S).max())
    for e in (0, 7, lay.num_edges - 1):
        th = trial_to_test(sys, lay.hat_dof(e)).reshape(lay.num_triangles, lay.block)
        support = set(np.nonzero(np.abs(th).sum(axis=1))[0])
        assert support <= {t for t, _ in mesh.skeleton.edge_tris[e]}


def test_trial_to_test_of_zero_column():
    import scipy.sparse as sp
    from dpgbem.assembly import BlockGram
    lay = DofLayout(1, 3)
    zero = SystemMatrices(lay, sp.csr_matrix((lay.n_test, lay.n_trial)),
                          np.zeros((lay.n_tau, 1)), None,
                          BlockGram((), np.eye(lay.block)[None], np.eye(lay.block)[None]),
                          np.zeros(lay.n_test))
    assert np.all(trial_to_test(zero, 0) == 0.0)


class PermutedSystem:
    """Same system with trial dofs reordered by ``perm``."""

    def __init__(self, sys, perm):
        self.sys, self.perm = sys, perm
        self.inv = np.argsort(perm)
        self.layout, self.gram, self.load = sys.layout, sys.gram, sys.load

    def matvec(self, u):
        return self.sys.matvec(u[self.inv])

    def rmatvec(self, r):
        return self.sys.rmatvec(r)[self.perm]

    def normal_matvec(self, u):
        return self.rmatvec(self.gram.solve(self.matvec(u)))

    def residual(self, u):
        return self.load - self.matvec(u)


def test_solution_invariant_under_reordering(systems, rng):
    _, sys = systems["cube", 1]
    sys = with_random_load(sys, rng)
    u, _ = solve_normal_equations(sys)
    perm = rng.permutation(sys.layout.n_trial)
    up, _ = solve_normal_equations(PermutedSystem(sys, perm))
    np.testing.assert_allclose(up.u[np.argsort(perm)], u.u, rtol=0,
                               atol=1e-7 * np.abs(u.u).max())


def test_trial_coefficients_slices(systems):
    _, sys = systems["screen", 0]
    lay = sys.layout
    u = TrialCoefficients(lay, np.arange(lay.n_trial, dtype=float))
    assert u.sigma.shape == (4, 2)
    assert len(u.phi) == 4 and len(u.sigma_hat) == 8
    np.testing.assert_array_equal(np.concatenate([u.sigma.ravel(), u.phi, u.sigma_hat]), u.u)
    v = TrialCoefficients.from_parts(lay, u.sigma, u.phi, u.sigma_hat)
    np.testing.assert_array_equal(v.u, u.u)
    with pytest.raises(ValueError):
        TrialCoefficients(lay, np.zeros(3))


def test_conjugate_gradient_small_spd(rng):
    A = rng.standard_normal((20, 20))
    A = A @ A.T + 20 * np.eye(20)
    b = rng.standard_normal(20)
    x, it, res = conjugate_gradient(lambda v: A @ v, b, tol=1e-12)
    np.testing.assert_allclose(A @ x, b, atol=1e-10)
    assert res <= 1e-12 and it <= 20 + 5


def test_screen_energy_error_quarter_per_refinement(screen):
    cfg = ExperimentConfig(experiment=3)
    from dpgbem.assembly import ExactSolution, screen_hat_values
    ex = ExactSolution(screen, screen_hat_values(screen))
    e = [solve_level(refine(screen, level), cfg, ex)[2].energy_error_sq for level in (2, 3)]
    assert 3.0 <= e[0] / e[1] <= 5.0


def test_edge_singularity_shows_in_indicators(screen):
    cfg = ExperimentConfig(experiment=4)
    mesh = refine(screen, 2)
    _, _, rep = solve_level(mesh, cfg)
    sk = mesh.skeleton
    bverts = np.unique(sk.edges[sk.is_boundary])
    touching = np.isin(mesh.triangles, bverts).any(axis=1)
    assert rep.indicators[touching].mean() > rep.indicators[~touching].mean()
