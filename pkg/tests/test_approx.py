import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrocascade.approx import (
    FitSpec,
    PwlCurve1D,
    envelope_range,
    fit_pwl_1d_optimal,
    fit_pwl_1d_uniform,
    max_error,
    mccormick_envelope,
    triangulate_grid_2d,
)
from hydrocascade.errors import FitError, InfeasibleFitError, SamplingError


def best_line_error_by_search(x, y):
    """Sup-norm error of the best single line, by brute-force grid search."""
    best = np.inf
    for a in np.linspace(0.5, 1.5, 201):
        r = y - a * x
        best = min(best, 0.5 * (r.max() - r.min()))
    return best


class TestUniformFit:
    def test_linear_data_exact(self):
        x = np.linspace(0, 1, 11)
        curve = fit_pwl_1d_uniform(x, 2 * x, 3)
        assert max_error(curve, (x, 2 * x))[0] == pytest.approx(0.0, abs=1e-12)

    def test_square_single_piece_is_one_eighth(self):
        x = np.linspace(0, 1, 101)
        err, _ = max_error(fit_pwl_1d_uniform(x, x**2, 1), (x, x**2))
        assert err == pytest.approx(0.125, abs=1e-3)
        assert err <= best_line_error_by_search(x, x**2) + 1e-9

    def test_least_squares_norm(self):
        x = np.linspace(0, 1, 101)
        l2 = fit_pwl_1d_uniform(x, x**2, 1, norm="l2")
        assert l2.y[1] - l2.y[0] == pytest.approx(1.0, abs=1e-2)

    def test_single_sample_is_degenerate(self):
        with pytest.raises(FitError):
            fit_pwl_1d_uniform([1.0], [2.0], 1)

    def test_error_nonincreasing_on_convex_data(self):
        x = np.linspace(-1, 2, 61)
        y = np.exp(x)
        errs = [max_error(fit_pwl_1d_uniform(x, y, n), (x, y))[0] for n in (1, 2, 4, 8)]
        assert all(b <= a + 1e-9 for a, b in zip(errs, errs[1:]))


class TestOptimalFit:
    def test_absolute_value_two_pieces(self):
        x = np.linspace(0, 1, 21)
        assert fit_pwl_1d_optimal(x, np.abs(x - 0.5), FitSpec(0.0)).n_pieces == 2

    def test_square_at_one_eighth(self):
        x = np.linspace(0, 1, 51)
        curve = fit_pwl_1d_optimal(x, x**2, FitSpec(0.125))
        assert curve.n_pieces == 1

    def test_collinear(self):
        x = np.linspace(-3, 3, 9)
        assert fit_pwl_1d_optimal(x, 4 - 2 * x, FitSpec(0.0)).n_pieces == 1

    def test_piece_cap_reports_minimum(self):
        x = np.linspace(0, 1, 41)
        with pytest.raises(InfeasibleFitError) as info:
            fit_pwl_1d_optimal(x, np.sin(8 * x), FitSpec(1e-3, max_pieces=2))
        assert info.value.minimal_pieces == fit_pwl_1d_optimal(x, np.sin(8 * x), FitSpec(1e-3)).n_pieces

    def test_negative_epsilon_rejected(self):
        with pytest.raises(FitError):
            FitSpec(-1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 40), st.floats(0.001, 1.0), st.integers(0, 2**32 - 1))
    def test_tolerance_always_met(self, n, eps, seed):
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(0, 10, n))
        y = np.cumsum(rng.normal(size=n))
        if len(np.unique(x)) < 2:
            return
        curve = fit_pwl_1d_optimal(x, y, FitSpec(eps))
        assert max_error(curve, (x, y))[0] <= eps + 1e-9 * max(1.0, np.abs(y).max())
        assert set(curve.x) <= set(x)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(3, 30), st.integers(0, 2**32 - 1))
    def test_looser_tolerance_never_needs_more_pieces(self, n, seed):
        rng = np.random.default_rng(seed)
        x = np.linspace(0, 1, n)
        y = rng.normal(size=n)
        tight = fit_pwl_1d_optimal(x, y, FitSpec(0.1)).n_pieces
        loose = fit_pwl_1d_optimal(x, y, FitSpec(0.4)).n_pieces
        assert loose <= tight


class TestSurfaces:
    surf = triangulate_grid_2d([0.0, 100.0], [0.0, 50.0], lambda q, h: q * h)

    def test_exact_at_vertex(self):
        assert self.surf(100.0, 50.0) == 5000.0

    def test_interior_point(self):
        assert self.surf(50.0, 25.0) == pytest.approx(2500.0)

    def test_lower_triangle_centroid(self):
        # lower triangle (0,0), (100,0), (100,50)
        cx, cy = 200.0 / 3, 50.0 / 3
        assert self.surf(cx, cy) == pytest.approx((0.0 + 0.0 + 5000.0) / 3)

    def test_degenerate_axis(self):
        with pytest.raises(SamplingError):
            triangulate_grid_2d([0.0], [0.0, 1.0], lambda a, b: a + b)

    def test_triangle_count(self):
        s = triangulate_grid_2d([0, 1, 2], [0, 1, 2, 3], lambda a, b: a * b)
        assert len(s.triangles()) == 2 * 2 * 3

    def test_exact_at_every_vertex(self):
        xg, yg = np.linspace(0, 10, 6), np.linspace(5, 9, 4)
        s = triangulate_grid_2d(xg, yg, lambda a, b: np.sin(a) * b)
        for a in xg:
            for b in yg:
                assert s(a, b) == pytest.approx(np.sin(a) * b, abs=1e-12)

    def test_continuous_across_shared_edges(self):
        xg, yg = np.linspace(0, 4, 5), np.linspace(0, 3, 4)
        s = triangulate_grid_2d(xg, yg, lambda a, b: a * a - 3 * a * b + np.cos(b))
        rng = np.random.default_rng(0)
        tris = s.triangles()
        for _ in range(100):
            i, j = int(rng.integers(0, 4)), int(rng.integers(0, 3))
            f = rng.random()
            # point on the diagonal of cell (i, j): shared by its two triangles
            px = xg[i] + f * (xg[i + 1] - xg[i])
            py = yg[j] + f * (yg[j + 1] - yg[j])
            k = 2 * (i * 3 + j)
            assert abs(s.evaluate_triangle(tris[k], px, py) - s.evaluate_triangle(tris[k + 1], px, py)) <= 1e-9
            if i + 1 < 4:
                # vertical edge between cell (i, j) and (i+1, j)
                ex, ey = xg[i + 1], yg[j] + f * (yg[j + 1] - yg[j])
                nb = 2 * ((i + 1) * 3 + j) + 1
                assert abs(s.evaluate_triangle(tris[k], ex, ey) - s.evaluate_triangle(tris[nb], ex, ey)) <= 1e-9


class TestMaxError:
    def test_exact_fit_first_tie(self):
        x = np.array([0.0, 1.0, 2.0])
        assert max_error(PwlCurve1D((0.0, 2.0), (0.0, 2.0)), (x, x)) == (0.0, 0)

    def test_equioscillation_points(self):
        x = np.linspace(0, 1, 101)
        line = PwlCurve1D((0.0, 1.0), (-0.125, 0.875))
        err, idx = max_error(line, (x, x**2))
        assert err == pytest.approx(0.125, abs=1e-3)
        assert x[idx] in (0.0, 0.5, 1.0)

    def test_outside_domain(self):
        with pytest.raises(FitError):
            max_error(PwlCurve1D((0.0, 1.0), (0.0, 1.0)), ([2.0], [2.0]))


class TestMcCormick:
    def test_corner_tight(self):
        ineqs = mccormick_envelope((0.0, 100.0), (40.0, 60.0))
        assert envelope_range(ineqs, 100.0, 60.0) == pytest.approx((6000.0, 6000.0))

    def test_centre_range(self):
        ineqs = mccormick_envelope((0.0, 100.0), (40.0, 60.0))
        lo, hi = envelope_range(ineqs, 50.0, 50.0)
        assert (lo, hi) == pytest.approx((2000.0, 3000.0))
        assert lo <= 2500.0 <= hi

    def test_degenerate_box(self):
        ineqs = mccormick_envelope((20.0, 20.0), (10.0, 30.0))
        for h in (10.0, 17.0, 30.0):
            assert envelope_range(ineqs, 20.0, h) == pytest.approx((20.0 * h, 20.0 * h))

    @given(
        st.floats(-50, 50), st.floats(0, 100), st.floats(-50, 50), st.floats(0, 100),
        st.floats(0, 1), st.floats(0, 1),
    )
    def test_valid_everywhere_in_box(self, q0, dq, h0, dh, fq, fh):
        ineqs = mccormick_envelope((q0, q0 + dq), (h0, h0 + dh))
        q, h = q0 + fq * dq, h0 + fh * dh
        scale = max(1.0, abs(q * h), abs(q0 * h0), abs((q0 + dq) * (h0 + dh)))
        assert all(iq.slack(q, h, q * h) >= -1e-9 * scale for iq in ineqs)

    def test_inverted_box(self):
        with pytest.raises(FitError):
            mccormick_envelope((5.0, 1.0), (0.0, 1.0))
