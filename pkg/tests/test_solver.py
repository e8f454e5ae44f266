import math

import numpy as np
import pytest
import scipy.linalg

from cise.errors import ActiveSetTooSmall, InvalidInput, SingularMatrix
from cise.kernels import Dataset, KernelPair, kernel_pfc
from cise.metrics import subspace_distance
from cise.simlab import StudyConfig, generate_study
from cise.solver import (
    PenaltyWeights,
    adaptive_weights,
    cise_fit,
    df_grassmann,
    osdre,
    penalty_rho,
    tune,
)


def random_pair(rng, p, scale=1.0):
    a = rng.standard_normal((p, p))
    m = a @ a.T * scale / p
    b = rng.standard_normal((p, p))
    nn = b @ b.T / p + np.eye(p)
    return KernelPair(m=0.5 * (m + m.T), nn=0.5 * (nn + nn.T), method="PCA")


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


class TestOsdre:
    def test_diagonal_case(self):
        kp = KernelPair(m=np.diag([5.0, 2.0, 1.0]), nn=np.eye(3), method="PCA")
        res = osdre(kp, 1)
        np.testing.assert_allclose(res.values, [5.0])
        np.testing.assert_allclose(np.abs(res.basis[:, 0]), [1, 0, 0],
                                   atol=1e-12)
        assert not res.degenerate

    def test_equal_kernels_degenerate(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 4))
        nn = a @ a.T + np.eye(4)
        kp = KernelPair(m=nn.copy(), nn=nn, method="PCA")
        res = osdre(kp, 1)
        assert res.values[0] == pytest.approx(1.0, abs=1e-10)
        assert res.degenerate

    def test_matches_direct_generalized_solve(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            kp = random_pair(rng, 4)
            res = osdre(kp, 2)
            w, v = scipy.linalg.eigh(kp.m, kp.nn)
            direct = v[:, ::-1][:, :2]
            assert subspace_distance(res.basis, direct) < 1e-8
            np.testing.assert_allclose(res.values, w[::-1][:2], atol=1e-10)

    def test_constraint_and_residual(self):
        rng = np.random.default_rng(5)
        kp = random_pair(rng, 6)
        res = osdre(kp, 3)
        np.testing.assert_allclose(res.basis.T @ kp.nn @ res.basis, np.eye(3),
                                   atol=1e-8)
        for j in range(3):
            resid = kp.m @ res.basis[:, j] - res.values[j] * (
                kp.nn @ res.basis[:, j])
            assert np.linalg.norm(resid) <= 1e-6 * (1 + abs(res.values[j]))

    def test_singular_constraint_matrix(self):
        kp = KernelPair(m=np.eye(2), nn=np.diag([1.0, 0.0]), method="PCA")
        with pytest.raises(SingularMatrix):
            osdre(kp, 1)

    def test_bad_dimension(self):
        kp = KernelPair(m=np.eye(2), nn=np.eye(2), method="PCA")
        with pytest.raises(InvalidInput):
            osdre(kp, 3)


class TestPenaltyRho:
    def test_unit_rows(self):
        v = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        assert penalty_rho(v, np.ones(3)) == pytest.approx(2.0)

    def test_zero_weights(self):
        rng = np.random.default_rng(7)
        v = rng.standard_normal((5, 2))
        assert penalty_rho(v, np.zeros(5)) == 0.0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            v = rng.standard_normal((6, 3))
            w = np.abs(rng.standard_normal(6))
            o = random_orthogonal(rng, 3)
            assert abs(penalty_rho(v @ o, w) - penalty_rho(v, w)) < 1e-12


class TestAdaptiveWeights:
    def test_zero_theta(self):
        rng = np.random.default_rng(11)
        w = adaptive_weights(rng.standard_normal((4, 2)), 0.0)
        np.testing.assert_array_equal(w.theta, np.zeros(4))
        assert not w.frozen.any()

    def test_inverse_root_scaling(self):
        vhat = np.array([[4.0], [1.0]])
        w = adaptive_weights(vhat, 1.0, r=0.5)
        np.testing.assert_allclose(w.theta, [0.5, 1.0])

    def test_tiny_rows_frozen(self):
        vhat = np.array([[1.0], [1e-15]])
        w = adaptive_weights(vhat, 1.0, r=0.5)
        assert not w.frozen[0] and w.frozen[1]
        assert np.isfinite(w.theta).all()

    def test_invalid_args(self):
        with pytest.raises(InvalidInput):
            adaptive_weights(np.ones((2, 1)), -1.0)
        with pytest.raises(InvalidInput):
            adaptive_weights(np.ones((2, 1)), 1.0, r=0.0)


class TestCiseFit:
    def test_zero_penalty_equals_unpenalized(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            p = int(rng.integers(2, 11))
            d = int(rng.integers(1, min(4, p + 1)))
            kp = random_pair(rng, p)
            est = cise_fit(kp, d, PenaltyWeights.zeros(p))
            res = osdre(kp, d)
            assert subspace_distance(est.basis, res.basis) < 1e-8
            assert est.active.tolist() == list(range(p))
            assert est.converged

    def test_exact_two_variable_structure(self):
        # block-diagonal kernel whose signal lives on variables {0, 1}:
        # strong penalties on the rest must zero those rows exactly, and the
        # kept block must agree with an exhaustive solve of the penalized
        # two-variable problem over the unit circle
        m = np.zeros((4, 4))
        m[:2, :2] = np.array([[2.0, 0.3], [0.3, 1.0]])
        nn = np.eye(4)
        nn[2:, 2:] += 0.2
        kp = KernelPair(m=m, nn=nn, method="PCA")
        theta = np.array([0.01, 0.01, 1.0, 1.0])
        est = cise_fit(kp, 1, PenaltyWeights(theta=theta,
                                             frozen=np.zeros(4, bool)))
        assert est.active.tolist() == [0, 1]
        np.testing.assert_array_equal(est.basis[2:], 0.0)

        m2, nn2, th2 = m[:2, :2], nn[:2, :2], theta[:2]
        best_q, best_v = math.inf, None
        for t in np.linspace(0.0, np.pi, 200001):
            u = np.array([math.cos(t), math.sin(t)])
            v = u / math.sqrt(u @ nn2 @ u)
            q = -(v @ m2 @ v) + th2[0] * abs(v[0]) + th2[1] * abs(v[1])
            if q < best_q:
                best_q, best_v = q, v
        got_q = -(est.basis[:2, 0] @ m2 @ est.basis[:2, 0]) + penalty_rho(
            est.basis[:2], th2)
        assert got_q <= best_q + 1e-8
        assert subspace_distance(est.basis[:2], best_v[:, None]) < 1e-3

    def test_extreme_penalty_collapses_to_d(self):
        # one-variable deaths stop at the dimension floor, so a huge penalty
        # yields p_active == d rather than an error
        rng = np.random.default_rng(19)
        kp = random_pair(rng, 4, scale=0.01)
        theta = np.full(4, 1e3)
        est = cise_fit(kp, 1, PenaltyWeights(theta=theta,
                                             frozen=np.zeros(4, bool)))
        assert est.p_active == 1

    def test_frozen_below_dimension_raises(self):
        rng = np.random.default_rng(20)
        kp = random_pair(rng, 4)
        frozen = np.array([False, True, True, True])
        with pytest.raises(ActiveSetTooSmall):
            cise_fit(kp, 2, PenaltyWeights(theta=np.ones(4), frozen=frozen))

    def test_basis_constraint_on_full_coordinates(self):
        rng = np.random.default_rng(23)
        kp = random_pair(rng, 8)
        base = osdre(kp, 2)
        w = adaptive_weights(base, 0.05)
        est = cise_fit(kp, 2, w)
        np.testing.assert_allclose(est.basis.T @ kp.nn @ est.basis, np.eye(2),
                                   atol=1e-8)

    def test_monotone_descent_on_stable_active_set(self):
        rng = np.random.default_rng(29)
        for trial in range(20):
            kp = random_pair(rng, 7)
            base = osdre(kp, 2)
            w = adaptive_weights(base, float(rng.uniform(0.01, 0.3)))
            est = cise_fit(kp, 2, w)
            trace = est.qtrace
            for (na, qa), (nb, qb) in zip(trace, trace[1:]):
                if na == nb:
                    assert qb <= qa + 1e-10

    def test_rotation_of_initialization_is_irrelevant(self):
        from cise.linalg import sym_eig

        rng = np.random.default_rng(31)
        kp = random_pair(rng, 6)
        base = osdre(kp, 2)
        w = adaptive_weights(base, 0.05)
        est1 = cise_fit(kp, 2, w)
        gamma0 = sym_eig(base.g).vectors[:, :2]
        o = random_orthogonal(rng, 2)
        est2 = cise_fit(kp, 2, w, _init_gamma=np.ascontiguousarray(gamma0 @ o))
        assert subspace_distance(est1.basis, est2.basis) < 1e-8

    def test_coordinate_independent_objective(self):
        rng = np.random.default_rng(37)
        kp = random_pair(rng, 5)
        w = np.abs(rng.standard_normal(5))
        v = rng.standard_normal((5, 2))
        o = random_orthogonal(rng, 2)
        q1 = -np.trace(v.T @ kp.m @ v) + penalty_rho(v, w)
        q2 = -np.trace((v @ o).T @ kp.m @ (v @ o)) + penalty_rho(v @ o, w)
        assert abs(q1 - q2) < 1e-10


class TestTune:
    def test_df_formula(self):
        assert df_grassmann(6, 2) == 8
        assert df_grassmann(3, 1) == 2
        assert df_grassmann(2, 2) == 0

    def test_zero_grid_selects_unpenalized(self):
        rng = np.random.default_rng(41)
        kp = random_pair(rng, 5)
        trace, est = tune(kp, 2, n=100, grid=[0.0])
        assert trace.selected == 0
        assert est.p_active == 5
        res = osdre(kp, 2)
        assert subspace_distance(est.basis, res.basis) < 1e-8

    def test_gamma_values(self):
        rng = np.random.default_rng(43)
        kp = random_pair(rng, 4)
        tr_aic, _ = tune(kp, 1, n=50, grid=[0.0], rule="aic")
        tr_bic, _ = tune(kp, 1, n=50, grid=[0.0], rule="bic")
        assert tr_aic.gamma == pytest.approx(2.0 / 50.0)
        assert tr_bic.gamma == pytest.approx(math.log(50.0) / 50.0)

    def test_tie_breaks_toward_larger_theta(self):
        # p == d == 1: the basis is pinned by the constraint, so every theta
        # gives the bit-identical criterion and the sparser (larger) theta wins
        kp = KernelPair(m=np.array([[2.0]]), nn=np.array([[1.0]]), method="PCA")
        trace, est = tune(kp, 1, n=40, grid=[0.1, 0.2, 0.3])
        crits = [pt.criterion for pt in trace.grid]
        assert len(set(crits)) == 1
        assert trace.selected == 2

    def test_failed_points_recorded_not_fatal(self, monkeypatch):
        import cise.solver as solver_mod

        rng = np.random.default_rng(53)
        kp = random_pair(rng, 5, scale=0.01)
        real_fit = solver_mod.cise_fit

        def flaky(kp_, d_, weights, **kw):
            if np.max(weights.theta) > 0.5:
                raise ActiveSetTooSmall("injected failure")
            return real_fit(kp_, d_, weights, **kw)

        monkeypatch.setattr(solver_mod, "cise_fit", flaky)
        trace, est = solver_mod.tune(kp, 2, n=60, grid=[0.0, 1e3])
        assert trace.grid[1].criterion == math.inf
        assert "ActiveSetTooSmall" in trace.grid[1].error
        assert trace.selected == 0
        assert est.p_active == 5

    def test_all_fits_failed(self, monkeypatch):
        from cise.errors import AllFitsFailed
        import cise.solver as solver_mod

        rng = np.random.default_rng(57)
        kp = random_pair(rng, 4)

        def doomed(*a, **kw):
            raise ActiveSetTooSmall("injected failure")

        monkeypatch.setattr(solver_mod, "cise_fit", doomed)
        with pytest.raises(AllFitsFailed):
            solver_mod.tune(kp, 1, n=60, grid=[0.0, 0.1])

    def test_study1_single_replications_recover_support(self):
        for seed in range(5):
            cfg = StudyConfig(study=1, n=120, seed=seed, method="pfc")
            data, relevant, _ = generate_study(cfg, 0)
            kp = kernel_pfc(data, "abs-lin-quad")
            trace, est = tune(kp, 1, data.n, rule="bic")
            assert est.active.tolist() == relevant.tolist()
            assert est.converged

    def test_invalid_rule(self):
        rng = np.random.default_rng(59)
        kp = random_pair(rng, 3)
        with pytest.raises(InvalidInput):
            tune(kp, 1, n=30, grid=[0.0], rule="ric")
