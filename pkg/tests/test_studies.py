import math

import pytest

from gravform import studies
from gravform.analytic import TWO_PI, sphere_pair_lambda
from gravform.geometry import AxisBox, BoxUnion, DomainError, GeometryPair, Sphere
from gravform.studies import (StudyRow, bound_audit, comb_convergence, cylinder_pair, cylinder_sweep,
                              evaluate_pair, slab_limit_scan, sphere_curve)

from oracles import coaxial_cylinder_lambda


class TestStudyRow:
    def test_rejects_negative_lambda(self):
        with pytest.raises(ValueError):
            StudyRow({"H": 0.1}, -1.0, "analytic")

    def test_rejects_nan_param(self):
        with pytest.raises(ValueError):
            StudyRow({"H": math.nan}, 1.0, "analytic")


class TestSlabScan:
    def test_default_scan(self):
        rows = slab_limit_scan()
        ratios = [r.extra["ratio"] for r in rows]
        assert [r.params["H"] for r in rows] == list(studies.DEFAULT_SLAB_H)
        assert all(a < b for a, b in zip(ratios, ratios[1:]))
        assert 0.99 <= ratios[3] < 1.0
        assert all(r.lambda_ < TWO_PI for r in rows)
        assert all(r.method == "closed_form" for r in rows)

    def test_corrected_value_at_005(self):
        row = slab_limit_scan([0.05])[0]
        assert row.extra["ratio"] == pytest.approx(0.8810040450546500, rel=1e-12)


class TestCombConvergence:
    def test_small_grid(self):
        rows = comb_convergence(0.05, [1e-3, 1e-5], [5, 25])
        assert len(rows) == 4
        assert [(r.params["h"], r.params["N"]) for r in rows] == [(1e-3, 5), (1e-3, 25), (1e-5, 5), (1e-5, 25)]
        target = slab_limit_scan([0.05])[0].lambda_
        for r in rows:
            assert r.extra["target"] == pytest.approx(target, rel=1e-12)
            assert r.extra["deviation"] == pytest.approx(abs(r.lambda_ - target) / target)
            assert r.lambda_ < TWO_PI
        assert rows[3].extra["deviation"] < rows[2].extra["deviation"]
        assert rows[3].extra["deviation"] < rows[1].extra["deviation"]


class TestSphereCurve:
    def test_values(self):
        rows = sphere_curve([2, 3, 4])
        assert rows[0].lambda_ == pytest.approx(math.pi / 3)
        assert rows[2].lambda_ == pytest.approx(math.pi / 24)
        assert rows[0].lambda_ > rows[1].lambda_ > rows[2].lambda_

    def test_domain(self):
        with pytest.raises(DomainError):
            sphere_curve([2, 1.99])


class TestCylinderSweep:
    def test_pair_geometry(self):
        p = cylinder_pair(1.5, 1.0, 0.01)
        assert p.B.zlo - p.A.zhi == pytest.approx(0.01)
        assert p.direction == (0, 0, 1)

    def test_small_grid(self):
        best, rows = cylinder_sweep([0.5, 1.5], [1.0], [0.01, 0.5], samples=50_000, seed=1)
        assert len(rows) == 4
        screened = max(rows, key=lambda r: r.lambda_)
        assert best.params == screened.params
        assert best.params["radius"] == 1.5 and best.params["gap_over_height"] == 0.01
        assert best.samples == 500_000 and best.extra["screening_lambda"] == screened.lambda_
        assert best.seed not in {r.seed for r in rows}
        assert len({r.seed for r in rows}) == 4
        assert all(0 <= r.lambda_ <= TWO_PI for r in rows)

    def test_confirmation_disabled(self):
        best, rows = cylinder_sweep([0.5, 1.5], [1.0], [0.5], samples=20_000, confirm_samples=0)
        assert best is max(rows, key=lambda r: r.lambda_)

    @pytest.mark.parametrize("R, L, g", [(1.5, 1.0, 0.05), (0.5, 2.0, 0.2), (2.0, 0.5, 0.5)])
    def test_matches_quadrature(self, R, L, g):
        best, _ = cylinder_sweep([R], [L], [g], samples=1_000_000, seed=2, confirm_samples=0)
        exact = coaxial_cylinder_lambda(R, L, g * L)
        assert abs(best.lambda_ - exact) < 4 * best.std_error

    def test_deterministic(self):
        a = cylinder_sweep([1.0], [1.0], [0.1, 0.2], samples=20_000, seed=3)[1]
        b = cylinder_sweep([1.0], [1.0], [0.1, 0.2], samples=20_000, seed=3)[1]
        assert a == b

    def test_far_gap_point_mass(self):
        R, L, g = 0.5, 0.5, 20.0
        best, _ = cylinder_sweep([R], [L], [g / L], samples=200_000, confirm_samples=0)
        d = L + g
        V = math.pi * R**2 * L
        assert best.lambda_ == pytest.approx(2 * V / d**3, rel=0.02)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            cylinder_sweep([], [1.0], [0.1])


class TestEvaluate:
    def test_auto_method(self):
        boxes = GeometryPair(BoxUnion((AxisBox(0, 1, 0, 1, 0, 1),)), BoxUnion((AxisBox(0, 1, 0, 1, 2, 3),)))
        assert evaluate_pair(boxes).method == "analytic"
        spheres = GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 3), 1))
        ev = evaluate_pair(spheres, samples=10_000)
        assert ev.method == "montecarlo" and ev.samples == 10_000 and ev.seed == 0

    def test_analytic_not_available(self):
        spheres = GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 3), 1))
        with pytest.raises(DomainError):
            evaluate_pair(spheres, "analytic")

    def test_unknown_method(self):
        spheres = GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 3), 1))
        with pytest.raises(ValueError):
            evaluate_pair(spheres, "quadrature")


class TestAudit:
    def test_empty_corpus(self):
        report = bound_audit([])
        assert report.entries == [] and report.passed and report.max_lambda is None

    def test_invalid_entry_flagged(self):
        corpus = [
            ("overlap", {"A": {"type": "sphere", "center": [0, 0, 0], "radius": 1},
                         "B": {"type": "sphere", "center": [0, 0, 1], "radius": 1}, "direction": [0, 0, 1]}),
            ("spheres", GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 2), 1))),
        ]
        report = bound_audit(corpus)
        assert [e.status for e in report.entries] == ["invalid", "ok"]
        assert "overlap" in report.entries[0].message
        assert report.passed
        assert report.max_lambda == pytest.approx(math.pi / 3)
        assert report.entries[1].method == "closed_form"

    def test_methods(self):
        corpus = [
            ("boxes", GeometryPair(BoxUnion((AxisBox(0, 1, 0, 1, 0, 1),)), BoxUnion((AxisBox(0, 1, 0, 1, 1, 2),)))),
            ("oblique spheres", GeometryPair(Sphere((0, 0, 0), 1), Sphere((0, 0, 3), 1), (1, 0, 1))),
        ]
        report = bound_audit(corpus, samples=200_000)
        boxes, spheres = report.entries
        assert boxes.method == "analytic" and boxes.tolerance == 1e-6
        assert spheres.method == "montecarlo"
        # principal direction recovers the center-line value regardless of the document direction
        assert spheres.lambda_ == pytest.approx(sphere_pair_lambda(1, 3), abs=4 * spheres.std_error)
        assert spheres.tolerance == pytest.approx(3 * spheres.std_error)

    def test_violation_detected(self, monkeypatch):
        monkeypatch.setattr(studies.analytic, "lambda_box_union", lambda pair: 7.0)
        pair = GeometryPair(BoxUnion((AxisBox(0, 1, 0, 1, 0, 1),)), BoxUnion((AxisBox(0, 1, 0, 1, 1, 2),)))
        report = bound_audit([("fake", pair)])
        assert not report.passed and report.violations[0].name == "fake"

    def test_default_corpus_shape(self):
        names = [n for n, _ in studies.default_corpus()]
        assert "touching spheres" in names
        assert sum(n.startswith("comb") for n in names) == 9
        assert len(set(names)) == len(names)
