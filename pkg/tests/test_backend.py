import numpy as np
import pytest

from cise import backend
from cise.kernels import KernelPair
from cise.metrics import subspace_distance
from cise.solver import PenaltyWeights, adaptive_weights, cise_fit, osdre

pure = backend.get_backend("pure")
try:
    compiled = backend.get_backend("compiled")
except ImportError:  # extension not built in this environment
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled backend not built")


def random_inputs(rng, p, d):
    a = rng.standard_normal((p, p))
    g = np.ascontiguousarray(0.5 * (a + a.T))
    b = rng.standard_normal((p, p))
    w = np.ascontiguousarray(b @ b.T + p * np.eye(p))
    h = np.abs(rng.standard_normal(p))
    gp = np.ascontiguousarray(np.linalg.qr(rng.standard_normal((p, d)))[0])
    return g, w, h, gp


class TestPureStep:
    def test_unpenalized_step_is_plain_eigensolve(self):
        rng = np.random.default_rng(1)
        g, w, _, _ = random_inputs(rng, 6, 2)
        gamma, v, rn, lam, dist = pure.penalized_step(g, w, np.zeros(6), 2)
        vals = np.linalg.eigvalsh(g)[::-1]
        np.testing.assert_allclose(lam, vals[:2], atol=1e-10)
        np.testing.assert_allclose(v, w @ gamma, atol=1e-12)
        assert np.isnan(dist)

    def test_distance_resolves_below_cancellation_floor(self):
        # a rotation by 1e-9 radians must be measurable: the naive
        # 1 - cos^2 form would floor out near sqrt(machine eps)
        g = np.ascontiguousarray(np.diag([6.0, 5.0, 4.0, 3.0, 2.0, 1.0]))
        t = 1e-9
        rot = np.eye(6)[:, :2]
        rot[0, 0], rot[2, 0] = np.cos(t), np.sin(t)
        *_, dist = pure.penalized_step(g, np.eye(6), np.zeros(6), 2,
                                       np.ascontiguousarray(rot))
        # gamma spans e1,e2; the reference basis is rotated by t toward e3
        assert dist == pytest.approx(t, rel=1e-4)


@needs_compiled
class TestBackendParity:
    def test_step_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p = int(rng.integers(1, 28))
            d = int(rng.integers(1, p + 1))
            g, w, h, gp = random_inputs(rng, p, d)
            rp = pure.penalized_step(g, w, h, d, gp)
            rc = compiled.penalized_step(g, w, h, d, gp)
            np.testing.assert_allclose(rp[2], rc[2], atol=1e-9)  # rownorms
            np.testing.assert_allclose(rp[3], rc[3], atol=1e-9)  # eigenvalues
            assert abs(rp[4] - rc[4]) < 1e-9                     # distance
            s = np.linalg.svd(rp[0].T @ rc[0], compute_uv=False)
            assert s.min() > 1.0 - 1e-8                          # same span

    def test_full_fit_agreement(self, monkeypatch):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((8, 8))
        m = a @ a.T / 8
        b = rng.standard_normal((8, 8))
        nn = b @ b.T / 8 + np.eye(8)
        kp = KernelPair(m=0.5 * (m + m.T), nn=0.5 * (nn + nn.T), method="PCA")
        w = adaptive_weights(osdre(kp, 2), 0.05)

        monkeypatch.setattr(backend, "penalized_step", pure.penalized_step)
        est_pure = cise_fit(kp, 2, w)
        monkeypatch.setattr(backend, "penalized_step", compiled.penalized_step)
        est_comp = cise_fit(kp, 2, w)

        assert est_pure.active.tolist() == est_comp.active.tolist()
        assert subspace_distance(est_pure.basis, est_comp.basis) < 1e-9
        np.testing.assert_allclose(est_pure.eigenvalues, est_comp.eigenvalues,
                                   atol=1e-10)


class TestSelection:
    def test_get_backend_rejects_unknown(self):
        with pytest.raises(ValueError):
            backend.get_backend("vectorized")

    def test_active_backend_is_exposed(self):
        assert backend.BACKEND in ("pure", "compiled")
