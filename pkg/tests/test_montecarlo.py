import math

import numpy as np
import pytest

from gravform import montecarlo
from gravform.analytic import lambda_box_union, sphere_pair_lambda
from gravform.geometry import AxisBox, BoxUnion, CylinderZ, DomainError, GeometryPair, Sphere
from gravform.montecarlo import (CHUNK_SIZE, EstimateWithError, TidalTensor, mc_lambda, mc_tensor,
                                 principal_direction, tidal_kernel)


@pytest.fixture(scope="module")
def sphere_pair():
    return GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 4), 1), (0, 0, 1))


@pytest.fixture(scope="module")
def box_pair():
    a = BoxUnion((AxisBox(0, 1, 0, 1, 0, 1),))
    b = BoxUnion((AxisBox(0.3, 1.3, -0.2, 0.8, 1.5, 2.5),))
    return GeometryPair(a, b, (0, 0, 1))


class TestTypes:
    def test_estimate_validation(self):
        with pytest.raises(ValueError):
            EstimateWithError(1.0, -0.1, 10)
        with pytest.raises(ValueError):
            EstimateWithError(1.0, 0.1, 1)

    def test_tensor_from_components(self):
        t = TidalTensor.from_components([1, 2, -3, 0.5, 0.25, -0.5], [0.1] * 6, 100)
        np.testing.assert_array_equal(t.matrix, t.matrix.T)
        assert t.matrix[0, 2] == 0.25 and t.matrix[1, 2] == -0.5
        assert t.trace == 0.0
        assert t.signed([0, 0, 1]) == -3.0


class TestKernel:
    def test_values(self):
        assert tidal_kernel([0, 0, 2], [0, 0, 1]) == pytest.approx(2 / 8)
        assert tidal_kernel([2, 0, 0], [0, 0, 1]) == pytest.approx(-1 / 8)
        n = np.array([1, 1, 1]) / math.sqrt(3)
        assert tidal_kernel([1, 1, 1], n) == pytest.approx(2 / 3**1.5)

    def test_coincident(self):
        with pytest.raises(DomainError):
            tidal_kernel([0, 0, 0], [0, 0, 1])


class TestEstimates:
    def test_sphere_pair(self, sphere_pair):
        est = mc_lambda(sphere_pair, 500_000, seed=3)
        assert abs(est.value - sphere_pair_lambda(1, 4)) < 4 * est.std_error
        assert est.std_error < 1e-3
        assert est.signed_value > 0

    def test_box_pair(self, box_pair):
        est = mc_lambda(box_pair, 500_000, seed=5)
        assert abs(est.value - lambda_box_union(box_pair)) < 4 * est.std_error

    def test_lateral_pair_sign(self):
        pair = GeometryPair(Sphere((0, 0, 0), 1), Sphere((4, 0, 0), 1), (0, 0, 1))
        est = mc_lambda(pair, 200_000)
        assert est.signed_value < 0
        assert est.value == pytest.approx(0.5 * sphere_pair_lambda(1, 4), abs=4 * est.std_error)

    def test_error_scales_as_inverse_sqrt(self, sphere_pair):
        e1 = mc_lambda(sphere_pair, 100_000, seed=1).std_error
        e2 = mc_lambda(sphere_pair, 400_000, seed=1).std_error
        assert e1 / e2 == pytest.approx(2.0, rel=0.1)

    def test_sample_count_validation(self, sphere_pair):
        with pytest.raises(ValueError):
            mc_lambda(sphere_pair, 1)

    def test_odd_sample_counts(self, sphere_pair):
        for n in (2, CHUNK_SIZE - 1, CHUNK_SIZE + 1):
            assert mc_lambda(sphere_pair, n).samples == n


class TestReproducibility:
    def test_same_seed_identical(self, box_pair):
        a = mc_lambda(box_pair, 150_000, seed=11)
        b = mc_lambda(box_pair, 150_000, seed=11)
        assert a == b

    def test_different_seed_differs(self, box_pair):
        assert mc_lambda(box_pair, 50_000, seed=1).value != mc_lambda(box_pair, 50_000, seed=2).value

    @pytest.mark.parametrize("workers", [2, 4, 7])
    def test_worker_count_invariant(self, box_pair, workers):
        serial = mc_lambda(box_pair, 300_000, seed=9, workers=1)
        parallel = mc_lambda(box_pair, 300_000, seed=9, workers=workers)
        assert serial == parallel
        t1 = mc_tensor(box_pair, 200_000, seed=9, workers=1)
        t2 = mc_tensor(box_pair, 200_000, seed=9, workers=workers)
        np.testing.assert_array_equal(t1.matrix, t2.matrix)

    def test_large_seed_accepted(self, box_pair):
        assert mc_lambda(box_pair, 1000, seed=2**70 + 3).samples == 1000

    def test_redraws_counted(self, box_pair, monkeypatch):
        real = montecarlo.sample_uniform
        calls = {"n": 0}

        def fake(shape, rng, size=None):
            pts = real(shape, rng, size)
            calls["n"] += 1
            if calls["n"] <= 2:
                pts[:3] = 0.5  # force coincident first rows on the first draw of A and B
            return pts

        monkeypatch.setattr(montecarlo, "sample_uniform", fake)
        est = mc_lambda(box_pair, 1000)
        assert est.redraws == 3
        assert math.isfinite(est.value)


class TestTensor:
    def test_consistent_with_lambda(self, box_pair):
        t = mc_tensor(box_pair, 200_000, seed=4)
        est = mc_lambda(box_pair, 200_000, seed=4)
        assert t.signed(box_pair.n) == pytest.approx(est.signed_value, rel=1e-10)
        assert t.std_errors[2, 2] == pytest.approx(est.std_error, rel=1e-8)

    def test_trace_free(self, sphere_pair):
        t = mc_tensor(sphere_pair, 300_000, seed=2)
        assert abs(t.trace) <= 1e-10 * np.abs(t.matrix).max()

    def test_axisymmetric_structure(self, sphere_pair):
        t = mc_tensor(sphere_pair, 400_000, seed=2)
        lam = sphere_pair_lambda(1, 4)
        np.testing.assert_allclose(np.diag(t.matrix), [-lam / 2, -lam / 2, lam], atol=5 * t.std_errors.max())

    def test_principal_direction_of_cylinder_pair(self):
        pair = GeometryPair(CylinderZ((0, 0, 0), 1, 1), CylinderZ((0, 0, 1.2), 1, 1), (1, 0, 0))
        n, lam = principal_direction(mc_tensor(pair, 200_000))
        np.testing.assert_allclose(n, [0, 0, 1], atol=0.02)
        assert lam > 0


class TestPrincipalDirection:
    def test_diagonal(self):
        n, lam = principal_direction(np.diag([0.5, -2.0, 1.5]))
        np.testing.assert_allclose(n, [0, 1, 0])
        assert lam == 2.0

    def test_zero_tensor(self):
        n, lam = principal_direction(np.zeros((3, 3)))
        np.testing.assert_array_equal(n, [0, 0, 1])
        assert lam == 0.0

    def test_rotated(self):
        rng = np.random.default_rng(0)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        m = q @ np.diag([-1.0, -2.0, 3.0]) @ q.T
        n, lam = principal_direction(m)
        assert lam == pytest.approx(3.0)
        assert abs(n @ q[:, 2]) == pytest.approx(1.0)
        assert n[np.argmax(np.abs(n))] > 0

    def test_maximizes_quadratic_form(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(3, 3))
        m = m + m.T
        n, lam = principal_direction(m)
        v = rng.normal(size=(5000, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        assert np.abs(np.einsum("ij,jk,ik->i", v, m, v)).max() <= lam + 1e-12
        assert abs(n @ m @ n) == pytest.approx(lam)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            principal_direction(np.full((3, 3), np.nan))
