"""Tests for the deterministic correlated Gaussian generators.

Oracles: bitwise identities that the construction guarantees (repeat
calls, stream-vs-array, prefix stability, |rho| = 1 degeneracy) and
sample statistics at sizes where the estimator noise is far below the
asserted windows.
"""

import numpy as np
import pytest

from copsketch.streamgen import (
    BLOCK_ROWS,
    gaussian_pair_array,
    gaussian_pair_stream,
    gaussian_tri_array,
    gaussian_tri_stream,
    validate_correlation_triple,
)


class TestPairGenerator:
    def test_shape_and_dtype(self):
        arr = gaussian_pair_array(17, 0.3, seed=0)
        assert arr.shape == (17, 2)
        assert arr.dtype == np.float64
        assert np.all(np.isfinite(arr))

    def test_single_row(self):
        assert gaussian_pair_array(1, -0.2, seed=5).shape == (1, 2)

    def test_deterministic_across_calls(self):
        a = gaussian_pair_array(1000, -0.8, seed=42)
        b = gaussian_pair_array(1000, -0.8, seed=42)
        assert np.array_equal(a, b)

    def test_seeds_differ(self):
        a = gaussian_pair_array(100, 0.5, seed=1)
        b = gaussian_pair_array(100, 0.5, seed=2)
        assert not np.array_equal(a, b)

    def test_stream_matches_array(self):
        arr = gaussian_pair_array(500, 0.6, seed=3)
        rows = np.array(list(gaussian_pair_stream(500, 0.6, seed=3)))
        assert np.array_equal(arr, rows)

    def test_stream_matches_array_across_block_boundary(self):
        n = BLOCK_ROWS + 3
        arr = gaussian_pair_array(n, -0.4, seed=11)
        rows = np.array(list(gaussian_pair_stream(n, -0.4, seed=11)))
        assert np.array_equal(arr, rows)

    def test_prefix_stability(self):
        # shorter runs are exact prefixes of longer ones, within and
        # across the internal block size
        long = gaussian_pair_array(BLOCK_ROWS + 7, 0.25, seed=9)
        assert np.array_equal(gaussian_pair_array(5, 0.25, seed=9), long[:5])
        assert np.array_equal(
            gaussian_pair_array(BLOCK_ROWS, 0.25, seed=9), long[:BLOCK_ROWS]
        )
        assert np.array_equal(
            gaussian_pair_array(BLOCK_ROWS + 1, 0.25, seed=9),
            long[: BLOCK_ROWS + 1],
        )

    def test_rho_one_duplicates_first_column(self):
        arr = gaussian_pair_array(300, 1.0, seed=8)
        assert np.array_equal(arr[:, 0], arr[:, 1])

    def test_rho_minus_one_negates_first_column(self):
        arr = gaussian_pair_array(300, -1.0, seed=8)
        assert np.array_equal(arr[:, 0], -arr[:, 1])

    @pytest.mark.parametrize("rho", [-0.8, 0.0, 0.3, 0.95])
    def test_sample_correlation(self, rho):
        arr = gaussian_pair_array(20000, rho, seed=12)
        assert abs(np.corrcoef(arr.T)[0, 1] - rho) < 0.03

    def test_marginals_standard_normal(self):
        arr = gaussian_pair_array(20000, 0.7, seed=1)
        for col in arr.T:
            assert abs(col.mean()) < 0.03
            assert abs(col.std() - 1.0) < 0.03

    @pytest.mark.parametrize(
        "n,rho,seed",
        [(0, 0.5, 1), (-3, 0.5, 1), (10, 0.5, -1), (10, 1.5, 1),
         (10, -1.0001, 1), (10, float("nan"), 1)],
    )
    def test_argument_validation(self, n, rho, seed):
        with pytest.raises(ValueError):
            gaussian_pair_array(n, rho, seed)

    def test_non_integer_arguments_rejected(self):
        with pytest.raises(ValueError):
            gaussian_pair_array(10.0, 0.5, 1)
        with pytest.raises(ValueError):
            gaussian_pair_array(10, 0.5, 1.0)

    def test_stream_validates_before_yielding(self):
        with pytest.raises(ValueError):
            gaussian_pair_stream(0, 0.5, 1)


class TestCorrelationTriple:
    def test_valid_triples_pass_through(self):
        assert validate_correlation_triple(0.5, 0.5, 0.0) == (0.5, 0.5, 0.0)
        assert validate_correlation_triple(0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)

    def test_psd_boundary_accepted(self):
        # rho12 = 1 forces rho23 == rho13; determinant exactly zero
        assert validate_correlation_triple(1.0, 0.5, 0.5) == (1.0, 0.5, 0.5)

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError, match="positive semidefinite"):
            validate_correlation_triple(0.9, 0.9, -0.9)

    def test_entry_domain_rejected(self):
        with pytest.raises(ValueError):
            validate_correlation_triple(1.2, 0.0, 0.0)
        with pytest.raises(ValueError):
            validate_correlation_triple(0.0, float("inf"), 0.0)


class TestTriGenerator:
    def test_shape(self):
        assert gaussian_tri_array(25, 0.5, 0.5, 0.0, seed=0).shape == (25, 3)

    def test_deterministic(self):
        a = gaussian_tri_array(800, 0.5, 0.5, 0.0, seed=7)
        b = gaussian_tri_array(800, 0.5, 0.5, 0.0, seed=7)
        assert np.array_equal(a, b)

    def test_stream_matches_array(self):
        args = (600, 0.4, 0.2, 0.1, 19)
        arr = gaussian_tri_array(*args[:4], seed=args[4])
        rows = np.array(list(gaussian_tri_stream(*args[:4], seed=args[4])))
        assert np.array_equal(arr, rows)

    @pytest.mark.parametrize(
        "rho12,rho23,rho13",
        [(0.5, 0.5, 0.0), (0.9, 0.2, 0.3), (-0.6, 0.1, -0.2)],
    )
    def test_pairwise_sample_correlations(self, rho12, rho23, rho13):
        arr = gaussian_tri_array(20000, rho12, rho23, rho13, seed=4)
        c = np.corrcoef(arr.T)
        assert abs(c[0, 1] - rho12) < 0.03
        assert abs(c[1, 2] - rho23) < 0.03
        assert abs(c[0, 2] - rho13) < 0.03

    def test_degenerate_first_pair(self):
        arr = gaussian_tri_array(500, 1.0, 0.5, 0.5, seed=2)
        assert np.array_equal(arr[:, 0], arr[:, 1])

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError):
            gaussian_tri_array(10, 0.9, 0.9, -0.9, seed=0)

    def test_marginals_standard_normal(self):
        arr = gaussian_tri_array(20000, 0.5, 0.5, 0.0, seed=6)
        for col in arr.T:
            assert abs(col.mean()) < 0.03
            assert abs(col.std() - 1.0) < 0.03
