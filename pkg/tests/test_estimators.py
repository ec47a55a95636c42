"""Tests for the scikit-learn estimator fronts.

Oracles: the underlying summary/vine APIs (the estimators must be thin,
behavior-identical wrappers) and the scikit-learn estimator protocol
(clone, get_params/set_params, NotFittedError discipline).
"""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from copsketch.copula import CopulaQueryResult, CopulaSummary
from copsketch.estimators import StreamingCopula, StreamingDVine
from copsketch.streamgen import gaussian_pair_array, gaussian_tri_array


class TestStreamingCopulaProtocol:
    def test_default_params(self):
        est = StreamingCopula()
        assert est.get_params() == {
            "epsilon": 0.05,
            "compress_every_insert": False,
        }

    def test_set_params_round_trip(self):
        est = StreamingCopula().set_params(epsilon=0.1,
                                           compress_every_insert=True)
        assert est.epsilon == 0.1
        assert est.compress_every_insert is True

    def test_clone_drops_state(self):
        arr = gaussian_pair_array(50, 0.3, seed=1)
        est = StreamingCopula(epsilon=0.1).fit(arr)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        assert not hasattr(cloned, "summary_")

    def test_not_fitted_errors(self):
        est = StreamingCopula()
        grid = [[0.5, 0.5]]
        with pytest.raises(NotFittedError):
            est.predict(grid)
        with pytest.raises(NotFittedError):
            est.transform([[0.0, 0.0]])
        with pytest.raises(NotFittedError):
            est.copula_query(0.5, 0.5)

    def test_fit_returns_self(self):
        arr = gaussian_pair_array(30, 0.3, seed=1)
        est = StreamingCopula()
        assert est.fit(arr) is est
        assert est.partial_fit(arr) is est

    def test_input_validation(self):
        est = StreamingCopula()
        with pytest.raises(ValueError):
            est.fit(np.zeros((4, 3)))
        with pytest.raises(ValueError):
            est.fit(np.zeros(4))
        with pytest.raises(ValueError):
            est.fit(np.empty((0, 2)))
        with pytest.raises(ValueError):
            est.fit([[1.0, float("nan")]])


class TestStreamingCopulaBehavior:
    def test_fit_resets_partial_fit_accumulates(self):
        a = gaussian_pair_array(40, 0.3, seed=2)
        b = gaussian_pair_array(25, 0.3, seed=3)
        est = StreamingCopula(epsilon=0.1).fit(a)
        assert est.n_seen_ == 40
        est.partial_fit(b)
        assert est.n_seen_ == 65
        est.fit(b)
        assert est.n_seen_ == 25

    def test_partial_fit_from_scratch(self):
        est = StreamingCopula(epsilon=0.1)
        est.partial_fit([[1.0, 2.0], [3.0, 0.5]])
        assert est.n_seen_ == 2

    def test_chunked_equals_one_shot(self):
        arr = gaussian_pair_array(90, -0.4, seed=4)
        one = StreamingCopula(epsilon=0.1).fit(arr)
        chunked = StreamingCopula(epsilon=0.1).fit(arr[:30])
        chunked.partial_fit(arr[30:50]).partial_fit(arr[50:])
        assert one.summary_.to_text() == chunked.summary_.to_text()

    def test_predict_matches_frozen_evaluator(self):
        arr = gaussian_pair_array(300, 0.6, seed=5)
        est = StreamingCopula(epsilon=0.05).fit(arr)
        frozen = est.summary_.freeze()
        grid = [(u1, u2) for u1 in (0.2, 0.5, 1.0) for u2 in (0.1, 0.9)]
        got = est.predict(grid)
        assert got.shape == (len(grid),)
        for (u1, u2), value in zip(grid, got):
            assert value == frozen(u1, u2)

    def test_transform_is_marginal_pit(self):
        arr = gaussian_pair_array(200, 0.2, seed=6)
        est = StreamingCopula(epsilon=0.05).fit(arr)
        out = est.transform(arr[:20])
        assert out.shape == (20, 2)
        assert np.all((out >= 0.0) & (out <= 1.0))
        frozen = est.summary_.freeze()
        for row, (x1, x2) in zip(out, arr[:20]):
            assert row[0] == frozen.marginal_cdf(1, float(x1))
            assert row[1] == frozen.marginal_cdf(2, float(x2))

    def test_copula_query_full_result(self):
        arr = gaussian_pair_array(100, 0.6, seed=7)
        est = StreamingCopula(epsilon=0.1).fit(arr)
        res = est.copula_query(0.4, 0.7)
        assert isinstance(res, CopulaQueryResult)
        assert res == est.summary_.copula(0.4, 0.7)

    def test_epsilon_reaches_summary(self):
        arr = gaussian_pair_array(30, 0.0, seed=8)
        est = StreamingCopula(epsilon=0.2).fit(arr)
        assert isinstance(est.summary_, CopulaSummary)
        assert est.summary_.epsilon == 0.2

    def test_compress_every_insert_reaches_summary(self):
        arr = gaussian_pair_array(30, 0.0, seed=8)
        est = StreamingCopula(epsilon=0.2, compress_every_insert=True).fit(arr)
        assert est.summary_.compress_every_insert is True

    def test_bad_epsilon_surfaces_at_fit(self):
        with pytest.raises(ValueError):
            StreamingCopula(epsilon=0.7).fit([[1.0, 2.0]])


class TestStreamingDVine:
    def test_default_params(self):
        assert StreamingDVine().get_params() == {
            "d": 3,
            "epsilon": 0.05,
            "n_query": 1000,
            "grid_m": 100,
        }

    def test_clone_protocol(self):
        est = StreamingDVine(d=3, epsilon=0.1, n_query=50, grid_m=10)
        arr = gaussian_tri_array(60, 0.5, 0.5, 0.0, seed=1)
        est.fit(arr)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()
        assert not hasattr(cloned, "sketch_")

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            StreamingDVine().predict([[0.5, 0.5, 0.5]])
        with pytest.raises(NotFittedError):
            StreamingDVine().model()

    def test_fit_accumulation_and_reset(self):
        arr = gaussian_tri_array(80, 0.5, 0.5, 0.0, seed=2)
        est = StreamingDVine(d=3, epsilon=0.1, n_query=30, grid_m=8)
        est.fit(arr[:50])
        assert est.n_seen_ == 50
        est.partial_fit(arr[50:])
        assert est.n_seen_ == 80
        est.fit(arr[:10])
        assert est.n_seen_ == 10

    def test_column_count_enforced(self):
        est = StreamingDVine(d=3)
        with pytest.raises(ValueError):
            est.fit(np.zeros((5, 2)))

    def test_predict_matches_model_evaluate(self):
        arr = gaussian_tri_array(250, 0.5, 0.5, 0.0, seed=3)
        est = StreamingDVine(d=3, epsilon=0.1, n_query=40, grid_m=8).fit(arr)
        model = est.model()
        pts = [(0.4, 0.6, 0.8), (0.7, 0.7, 0.7), (1.0, 0.5, 0.25)]
        got = est.predict(pts)
        assert got.shape == (3,)
        for u, value in zip(pts, got):
            assert value == model.evaluate(list(u))

    def test_model_cached_until_new_data(self):
        arr = gaussian_tri_array(100, 0.5, 0.5, 0.0, seed=4)
        est = StreamingDVine(d=3, epsilon=0.1, n_query=30, grid_m=8).fit(arr)
        m1 = est.model()
        assert est.model() is m1
        est.partial_fit(arr[:5])
        m2 = est.model()
        assert m2 is not m1

    def test_d2_vine(self):
        arr = gaussian_pair_array(120, 0.4, seed=5)
        est = StreamingDVine(d=2, epsilon=0.1, n_query=25, grid_m=8).fit(arr)
        value = est.predict([[0.5, 0.5]])[0]
        assert 0.0 <= value <= 1.0
