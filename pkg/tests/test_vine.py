"""Tests for the D-vine construction.

Oracles: closed-form trapezoid sums on polynomial integrands (where the
rule is exact or has a known error term), hand-enumerated pair layouts,
the exact in-memory vine as reference for the summary-backed one, and
wiring identities that recompute the recursion from the model's own
pair evaluators.
"""

import numpy as np
import pytest

from copsketch.copula import CopulaSummary
from copsketch.exact import DataBuffer, ExactCopulaEvaluator
from copsketch.vine import (
    DVineModel,
    DVineSketch,
    PairSpec,
    conditioning_sets,
    exact_vine,
    h_integral,
    h_integral_second,
    summary_vine,
)
from copsketch.streamgen import gaussian_pair_array, gaussian_tri_array


def tri_summaries(arr, epsilon):
    d = arr.shape[1]
    out = [CopulaSummary(epsilon) for _ in range(d - 1)]
    for row in arr:
        for i in range(d - 1):
            out[i].insert(float(row[i]), float(row[i + 1]))
    return out


# ----------------------------------------------------------------------
# pair layout


class TestConditioningSets:
    def test_d2(self):
        assert conditioning_sets(2) == [PairSpec(1, 2, ())]

    def test_d3(self):
        assert conditioning_sets(3) == [
            PairSpec(1, 2, ()),
            PairSpec(2, 3, ()),
            PairSpec(1, 3, (2,)),
        ]

    def test_d4(self):
        specs = conditioning_sets(4)
        assert specs == [
            PairSpec(1, 2, ()),
            PairSpec(2, 3, ()),
            PairSpec(3, 4, ()),
            PairSpec(1, 3, (2,)),
            PairSpec(2, 4, (3,)),
            PairSpec(1, 4, (2, 3)),
        ]
        assert len(specs) == 4 * 3 // 2

    def test_levels(self):
        assert [s.level for s in conditioning_sets(4)] == [1, 1, 1, 2, 2, 3]

    def test_too_small(self):
        for d in (1, 0, -2):
            with pytest.raises(ValueError):
                conditioning_sets(d)


# ----------------------------------------------------------------------
# conditioning integrals


class TestHIntegral:
    def test_exact_on_linear_integrand(self):
        # integrand t*v is linear in t, so the trapezoid rule is exact:
        # integral over [0, a] equals v * a^2 / 2
        for a, v, m in [(0.8, 0.5, 7), (1.0, 1.0, 2), (0.3, 0.9, 33)]:
            got = h_integral(lambda t, w: t * w, a, v, m)
            assert got == pytest.approx(v * a * a / 2.0, abs=1e-14)

    def test_known_error_on_quadratic_integrand(self):
        # for t^2 the composite trapezoid sum equals a^3/3 + a^3/(6 m^2)
        for a, m in [(1.0, 4), (0.6, 5), (1.0, 100)]:
            got = h_integral(lambda t, w: t * t, a, 0.5, m)
            assert got == pytest.approx(a**3 / 3 + a**3 / (6 * m * m),
                                        abs=1e-13)

    def test_zero_upper_limit_short_circuits(self):
        def explode(t, v):
            raise AssertionError("must not be evaluated")

        assert h_integral(explode, 0.0, 0.7, 10) == 0.0

    def test_validation(self):
        c = lambda t, v: t * v
        with pytest.raises(ValueError):
            h_integral(c, 0.5, 0.5, 1)
        with pytest.raises(ValueError):
            h_integral(c, -0.1, 0.5, 4)
        with pytest.raises(ValueError):
            h_integral(c, 0.5, 1.2, 4)

    def test_second_flips_arguments(self):
        # C(x, y) = x^2 * y: integral of C(v, t) dt over [0, a] is
        # v^2 * a^2 / 2, again exact under the trapezoid rule
        c = lambda x, y: x * x * y
        for a, v in [(0.9, 0.4), (0.5, 1.0)]:
            got = h_integral_second(c, a, v, 6)
            assert got == pytest.approx(v * v * a * a / 2.0, abs=1e-14)

    def test_second_equals_first_on_symmetric_copula(self):
        c = lambda x, y: min(x, y)
        for a, v in [(0.8, 0.3), (0.25, 0.9)]:
            assert h_integral_second(c, a, v, 16) == pytest.approx(
                h_integral(c, a, v, 16), abs=1e-15
            )

    def test_monotone_in_upper_limit(self):
        c = lambda t, v: t * v
        vals = [h_integral(c, a, 0.6, 8) for a in np.linspace(0.0, 1.0, 9)]
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:]))


# ----------------------------------------------------------------------
# model construction and validation


class TestDVineModelValidation:
    def make_pair_eval(self, n=50, rho=0.4, seed=1):
        arr = gaussian_pair_array(n, rho, seed)
        return arr, ExactCopulaEvaluator(arr[:, 0], arr[:, 1])

    def ecdf_marginals(self, arr):
        cols = [np.sort(arr[:, i]) for i in range(arr.shape[1])]

        def cdf(component, x):
            col = cols[component - 1]
            return float(np.searchsorted(col, x, side="right")) / len(col)

        def quantile(component, u):
            col = cols[component - 1]
            idx = max(1, int(np.ceil(u * len(col)))) - 1
            return float(col[idx])

        return cdf, quantile

    def test_window_must_be_2d_with_2_rows(self):
        arr, ev = self.make_pair_eval()
        cdf, quantile = self.ecdf_marginals(arr)
        with pytest.raises(ValueError):
            DVineModel([ev], cdf, quantile, arr[:1])
        with pytest.raises(ValueError):
            DVineModel([ev], cdf, quantile, arr[:, 0])

    def test_one_column_window_rejected(self):
        arr, ev = self.make_pair_eval()
        cdf, quantile = self.ecdf_marginals(arr)
        with pytest.raises(ValueError):
            DVineModel([ev], cdf, quantile, arr[:, :1])

    def test_pair_count_must_match_dimension(self):
        arr, ev = self.make_pair_eval()
        cdf, quantile = self.ecdf_marginals(arr)
        with pytest.raises(ValueError):
            DVineModel([ev, ev], cdf, quantile, arr)

    def test_grid_m_minimum(self):
        arr, ev = self.make_pair_eval()
        cdf, quantile = self.ecdf_marginals(arr)
        with pytest.raises(ValueError):
            DVineModel([ev], cdf, quantile, arr, grid_m=1)

    def test_evaluate_validates_point(self):
        model = exact_vine(gaussian_pair_array(100, 0.2, seed=3), n_query=50,
                           grid_m=10)
        with pytest.raises(ValueError):
            model.evaluate([0.5])
        with pytest.raises(ValueError):
            model.evaluate([0.5, 0.5, 0.5])
        with pytest.raises(ValueError):
            model.evaluate([0.0, 0.5])
        with pytest.raises(ValueError):
            model.evaluate([0.5, 1.0001])

    def test_metadata(self):
        arr = gaussian_tri_array(120, 0.5, 0.5, 0.0, seed=1)
        model = exact_vine(arr, n_query=40, grid_m=12)
        assert model.d == 3
        assert model.grid_m == 12
        assert model.window_size == 40


# ----------------------------------------------------------------------
# evaluation semantics


class TestEvaluate:
    def test_d2_equals_pair_copula(self):
        arr = gaussian_pair_array(400, 0.6, seed=5)
        model = exact_vine(arr, n_query=100, grid_m=10)
        exact = ExactCopulaEvaluator(arr[:, 0], arr[:, 1])
        for u1 in (0.1, 0.5, 0.93, 1.0):
            for u2 in (0.2, 0.77, 1.0):
                assert model.evaluate([u1, u2]) == exact(u1, u2)

    def test_d3_recursion_wiring(self):
        # recompute the recursion by hand from the model's own pair
        # evaluators; evaluate() must agree exactly
        arr = gaussian_tri_array(300, 0.5, 0.5, 0.0, seed=8)
        m = 14
        model = exact_vine(arr, n_query=80, grid_m=m)
        c12 = model.pair_evaluator(1, 1)
        c23 = model.pair_evaluator(2, 1)
        c13_2 = model.pair_evaluator(1, 2)

        def clamp(x):
            return min(1.0, max(0.0, x))

        for u in [(0.3, 0.6, 0.9), (0.5, 0.5, 0.5), (0.9, 0.2, 0.7)]:
            a = clamp(h_integral(c12, u[0], u[1], m))
            b = clamp(h_integral_second(c23, u[2], u[1], m))
            expected = clamp(c12(u[0], u[1]) * c23(u[1], u[2]) * c13_2(a, b))
            assert model.evaluate(list(u)) == expected

    def test_value_in_unit_interval(self):
        arr = gaussian_tri_array(200, 0.5, 0.5, 0.0, seed=2)
        model = exact_vine(arr, n_query=60, grid_m=10)
        rng = np.random.default_rng(0)
        for _ in range(25):
            u = rng.uniform(0.05, 1.0, size=3)
            assert 0.0 <= model.evaluate(u) <= 1.0

    def test_pair_evaluator_unknown_pair(self):
        arr = gaussian_tri_array(100, 0.5, 0.5, 0.0, seed=2)
        model = exact_vine(arr, n_query=50, grid_m=8)
        with pytest.raises(KeyError):
            model.pair_evaluator(3, 1)


class TestPseudoData:
    def test_pseudo_observations_shape_and_range(self):
        arr = gaussian_tri_array(150, 0.5, 0.5, 0.0, seed=9)
        model = exact_vine(arr, n_query=70, grid_m=10)
        for i in (1, 2):
            hl, hr = model.pseudo_observations(i)
            assert hl.shape == hr.shape == (70,)
            assert np.all((hl >= 0.0) & (hl <= 1.0))
            assert np.all((hr >= 0.0) & (hr <= 1.0))

    def test_pseudo_observations_returns_copies(self):
        arr = gaussian_tri_array(100, 0.5, 0.5, 0.0, seed=9)
        model = exact_vine(arr, n_query=40, grid_m=8)
        hl, _ = model.pseudo_observations(1)
        hl[:] = -99.0
        hl2, _ = model.pseudo_observations(1)
        assert np.all(hl2 >= 0.0)

    def test_d2_exposes_adjacent_pair_uniforms(self):
        arr = gaussian_pair_array(80, 0.3, seed=4)
        model = exact_vine(arr, n_query=30, grid_m=8)
        hl, hr = model.pseudo_observations(1)
        assert hl.shape == (30,)
        assert np.all((hr >= 0.0) & (hr <= 1.0))

    def test_pseudo_data_buffer(self):
        arr = gaussian_tri_array(150, 0.5, 0.5, 0.0, seed=9)
        model = exact_vine(arr, n_query=70, grid_m=10)
        buf = model.pseudo_data(1, 2)
        assert isinstance(buf, DataBuffer)
        assert buf.width == 2
        assert len(buf) == 70


# ----------------------------------------------------------------------
# summary-backed vine vs exact vine


class TestSummaryVine:
    def test_mismatched_counts_rejected(self):
        arr = gaussian_tri_array(50, 0.5, 0.5, 0.0, seed=0)
        summaries = tri_summaries(arr, 0.1)
        summaries[0].insert(0.0, 0.0)
        with pytest.raises(ValueError, match="disagree"):
            summary_vine(summaries, arr[-20:])

    def test_empty_summaries_rejected(self):
        with pytest.raises(ValueError):
            summary_vine([], np.zeros((5, 2)))

    def test_d2_matches_frozen_pair_copula(self):
        arr = gaussian_pair_array(500, -0.6, seed=6)
        (cs,) = tri_summaries(arr, 0.05)
        model = summary_vine([cs], arr[-60:], grid_m=10)
        frozen = cs.freeze()
        for u1 in (0.15, 0.5, 0.88):
            for u2 in (0.3, 0.95):
                assert model.evaluate([u1, u2]) == frozen(u1, u2)

    def test_close_to_exact_vine_d2(self):
        arr = gaussian_pair_array(800, 0.5, seed=10)
        (cs,) = tri_summaries(arr, 0.05)
        s = summary_vine([cs], arr[-100:], grid_m=10)
        e = exact_vine(arr, n_query=100, grid_m=10)
        for u1, u2 in [(0.3, 0.7), (0.5, 0.5), (0.8, 0.2)]:
            assert abs(s.evaluate([u1, u2]) - e.evaluate([u1, u2])) <= 0.3

    def test_close_to_exact_vine_d3(self):
        arr = gaussian_tri_array(600, 0.5, 0.5, 0.0, seed=12)
        summaries = tri_summaries(arr, 0.05)
        s = summary_vine(summaries, arr[-80:], grid_m=10)
        e = exact_vine(arr, n_query=80, grid_m=10)
        for u in [(0.3, 0.5, 0.7), (0.6, 0.6, 0.6), (0.9, 0.4, 0.8)]:
            assert abs(s.evaluate(list(u)) - e.evaluate(list(u))) <= 0.5


# ----------------------------------------------------------------------
# streaming front end


class TestDVineSketch:
    def test_constructor_validation(self):
        with pytest.raises(ValueError):
            DVineSketch(1, 0.1)
        with pytest.raises(ValueError):
            DVineSketch(3, 0.1, n_query=1)
        with pytest.raises(ValueError):
            DVineSketch(3, 0.7)

    def test_insert_validation(self):
        sk = DVineSketch(3, 0.1)
        with pytest.raises(ValueError):
            sk.insert([1.0, 2.0])
        with pytest.raises(ValueError):
            sk.insert([1.0, float("nan"), 2.0])
        assert sk.n == 0

    def test_window_caps_at_n_query(self):
        sk = DVineSketch(2, 0.2, n_query=10)
        for i in range(25):
            sk.insert([float(i), float(-i)])
        assert sk.n == 25
        assert len(sk.window) == 10
        assert sk.window[0] == (15.0, -15.0)
        assert all(s.n == 25 for s in sk.summaries)

    def test_model_needs_two_rows(self):
        sk = DVineSketch(2, 0.2)
        with pytest.raises(ValueError):
            sk.model()
        sk.insert([1.0, 2.0])
        with pytest.raises(ValueError):
            sk.model()
        sk.insert([2.0, 1.0])
        sk.model(grid_m=4)

    def test_deterministic_pipeline(self):
        arr = gaussian_tri_array(300, 0.5, 0.5, 0.0, seed=3)

        def build():
            sk = DVineSketch(3, 0.1, n_query=50)
            for row in arr:
                sk.insert(row)
            return sk.model(grid_m=8)

        m1, m2 = build(), build()
        for u in [(0.4, 0.6, 0.8), (0.7, 0.7, 0.7)]:
            assert m1.evaluate(list(u)) == m2.evaluate(list(u))

    def test_matches_manual_summary_vine(self):
        arr = gaussian_tri_array(200, 0.5, 0.5, 0.0, seed=5)
        sk = DVineSketch(3, 0.1, n_query=40)
        for row in arr:
            sk.insert(row)
        manual = summary_vine(tri_summaries(arr, 0.1), arr[-40:], grid_m=8)
        auto = sk.model(grid_m=8)
        for u in [(0.3, 0.6, 0.9), (0.5, 0.5, 0.5)]:
            assert auto.evaluate(list(u)) == manual.evaluate(list(u))
