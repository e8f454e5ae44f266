import numpy as np
import pytest

from cise.errors import InvalidInput, RankDeficient
from cise.metrics import selection_outcome, subspace_distance


def rand_subspace(rng, p, d):
    return rng.standard_normal((p, d))


class TestSubspaceDistance:
    def test_same_matrix_is_zero(self):
        rng = np.random.default_rng(1)
        a = rand_subspace(rng, 6, 2)
        assert subspace_distance(a, a) < 1e-12

    def test_orthogonal_lines(self):
        e1 = np.array([[1.0], [0.0]])
        e2 = np.array([[0.0], [1.0]])
        assert abs(subspace_distance(e1, e2) - 1.0) < 1e-12

    def test_45_degree_line(self):
        # projection difference between span(e1) and span((1,1)) has
        # eigenvalues +-1/sqrt(2); hand-solved oracle
        e1 = np.array([[1.0], [0.0]])
        diag = np.array([[1.0], [1.0]])
        assert abs(subspace_distance(e1, diag) - np.sqrt(0.5)) < 1e-12

    def test_metric_axioms(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            p = int(rng.integers(2, 9))
            d = int(rng.integers(1, p))
            a = rand_subspace(rng, p, d)
            b = rand_subspace(rng, p, d)
            c = rand_subspace(rng, p, d)
            dab = subspace_distance(a, b)
            dba = subspace_distance(b, a)
            dac = subspace_distance(a, c)
            dcb = subspace_distance(c, b)
            assert dab >= 0
            assert abs(dab - dba) < 1e-12
            assert dab <= dac + dcb + 1e-10
            assert dab <= 1.0 + 1e-12

    def test_identity_of_indiscernibles(self):
        rng = np.random.default_rng(7)
        a = rand_subspace(rng, 7, 3)
        r = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        assert subspace_distance(a, a @ r) < 1e-10
        b = rand_subspace(rng, 7, 3)
        assert subspace_distance(a, b) > 1e-6

    def test_line_distance_is_sine_of_angle(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            a = rng.standard_normal(5)
            b = rng.standard_normal(5)
            cosang = abs(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
            want = np.sqrt(max(0.0, 1.0 - cosang**2))
            got = subspace_distance(a[:, None], b[:, None])
            assert abs(got - want) < 1e-10

    def test_rank_deficient_rejected(self):
        a = np.ones((4, 2))
        with pytest.raises(RankDeficient):
            subspace_distance(a, np.eye(4)[:, :2])

    def test_dimension_mismatch_is_allowed_between_d(self):
        # d may differ; ambient dimension may not
        a = np.eye(5)[:, :2]
        b = np.eye(5)[:, :3]
        assert 0.0 <= subspace_distance(a, b) <= 1.0
        with pytest.raises(InvalidInput):
            subspace_distance(np.eye(4)[:, :2], np.eye(5)[:, :2])


class TestSelectionOutcome:
    def test_exact(self):
        out = selection_outcome({1, 2, 3}, {1, 2, 3}, 24)
        assert out.relevant_hit_fraction == 1.0
        assert out.irrelevant_zero_fraction == 1.0
        assert out.exact

    def test_missing_relevant(self):
        out = selection_outcome({1, 2}, {1, 2, 3}, 24)
        assert out.relevant_hit_fraction == pytest.approx(2.0 / 3.0)
        assert out.irrelevant_zero_fraction == 1.0
        assert not out.exact

    def test_extra_irrelevant(self):
        out = selection_outcome({1, 2, 3, 7}, {1, 2, 3}, 24)
        assert out.relevant_hit_fraction == 1.0
        assert out.irrelevant_zero_fraction == pytest.approx(20.0 / 21.0)
        assert not out.exact

    def test_exact_iff_both_fractions_one(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            p = int(rng.integers(2, 12))
            rel = set(rng.choice(p, size=rng.integers(1, p + 1),
                                 replace=False).tolist())
            act = set(rng.choice(p, size=rng.integers(0, p + 1),
                                 replace=False).tolist())
            out = selection_outcome(act, rel, p)
            both_one = (out.relevant_hit_fraction == 1.0
                        and out.irrelevant_zero_fraction == 1.0)
            assert out.exact == both_one

    def test_empty_relevant_rejected(self):
        with pytest.raises(InvalidInput):
            selection_outcome({1}, set(), 5)
