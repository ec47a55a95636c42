"""Scikit-learn style estimator fronts for the streaming summaries.

These wrappers follow the estimator protocol — constructor stores
hyperparameters untouched, ``fit``/``partial_fit`` return ``self``, fitted
state lives in trailing-underscore attributes, ``get_params``/``set_params``
come from :class:`sklearn.base.BaseEstimator` — so the sketches compose with
pipelines, cloning and grid search like any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .copula import CopulaSummary
from .vine import DEFAULT_GRID_PANELS, DEFAULT_QUERY_WINDOW, DVineSketch


def _as_finite_2d(X, expected_cols: int | None, name: str) -> np.ndarray:
    """Validate array input: 2-D, finite, optionally a fixed column count."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one row")
    if expected_cols is not None and arr.shape[1] != expected_cols:
        raise ValueError(
            f"{name} must have {expected_cols} columns, got {arr.shape[1]}"
        )
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


class StreamingCopula(BaseEstimator, TransformerMixin):
    """Streaming estimator of a bivariate empirical copula.

    :param epsilon: rank accuracy of the underlying summaries; copula
        values carry an additive ``5 * epsilon`` bound.
    :param compress_every_insert: trade per-row time for minimal space.

    ``fit`` starts from scratch; ``partial_fit`` accumulates, so chunked
    feeding equals one-shot feeding row for row.

    Fitted attributes: ``summary_`` (the live :class:`CopulaSummary`) and
    ``n_seen_``.
    """

    def __init__(
        self, epsilon: float = 0.05, compress_every_insert: bool = False
    ) -> None:
        self.epsilon = epsilon
        self.compress_every_insert = compress_every_insert

    # ------------------------------------------------------------------

    def _check_fitted(self) -> None:
        if not hasattr(self, "summary_") or self.summary_.n == 0:
            raise NotFittedError(
                "this StreamingCopula instance has seen no data; call fit "
                "or partial_fit first"
            )

    def fit(self, X, y=None) -> "StreamingCopula":
        """Discard any previous state and absorb ``X`` (shape ``(n, 2)``)."""
        self.summary_ = CopulaSummary(
            self.epsilon, compress_every_insert=self.compress_every_insert
        )
        self.n_seen_ = 0
        return self.partial_fit(X)

    def partial_fit(self, X, y=None) -> "StreamingCopula":
        """Absorb more rows of ``X`` into the existing summary."""
        if not hasattr(self, "summary_"):
            self.summary_ = CopulaSummary(
                self.epsilon, compress_every_insert=self.compress_every_insert
            )
            self.n_seen_ = 0
        arr = _as_finite_2d(X, 2, "X")
        for x1, x2 in arr:
            self.summary_.insert(float(x1), float(x2))
        self.n_seen_ = self.summary_.n
        return self

    # ------------------------------------------------------------------

    def predict(self, U) -> np.ndarray:
        """Copula values at the query points ``U`` (shape ``(m, 2)`` of
        coordinates in ``(0, 1]``)."""
        self._check_fitted()
        pts = _as_finite_2d(U, 2, "U")
        ev = self.summary_.freeze()
        return np.array([ev(float(u1), float(u2)) for u1, u2 in pts])

    def transform(self, X) -> np.ndarray:
        """Probability-integral transform: map raw pairs through the two
        approximate marginal CDFs into ``[0, 1]^2``."""
        self._check_fitted()
        arr = _as_finite_2d(X, 2, "X")
        ev = self.summary_.freeze()
        out = np.empty_like(arr)
        for k, (x1, x2) in enumerate(arr):
            out[k, 0] = ev.marginal_cdf(1, float(x1))
            out[k, 1] = ev.marginal_cdf(2, float(x2))
        return out

    def copula_query(self, u1: float, u2: float):
        """Full query result (value, slab count, covering index, bound)."""
        self._check_fitted()
        return self.summary_.copula(u1, u2)


class StreamingDVine(BaseEstimator):
    """Streaming estimator of a ``d``-dimensional D-vine copula.

    :param d: stream dimension (at least 2).
    :param epsilon: accuracy of the adjacent-pair summaries.
    :param n_query: trailing-window length used for the conditional trees.
    :param grid_m: trapezoid panels of the conditioning integrals.

    Fitted attributes: ``sketch_`` (the live :class:`DVineSketch`) and
    ``n_seen_``.  The queryable model is rebuilt on demand after new data.
    """

    def __init__(
        self,
        d: int = 3,
        epsilon: float = 0.05,
        n_query: int = DEFAULT_QUERY_WINDOW,
        grid_m: int = DEFAULT_GRID_PANELS,
    ) -> None:
        self.d = d
        self.epsilon = epsilon
        self.n_query = n_query
        self.grid_m = grid_m

    def _check_fitted(self) -> None:
        if not hasattr(self, "sketch_") or self.sketch_.n == 0:
            raise NotFittedError(
                "this StreamingDVine instance has seen no data; call fit "
                "or partial_fit first"
            )

    def fit(self, X, y=None) -> "StreamingDVine":
        """Discard any previous state and absorb ``X`` (shape ``(n, d)``)."""
        self.sketch_ = DVineSketch(self.d, self.epsilon, n_query=self.n_query)
        self.n_seen_ = 0
        self._model = None
        return self.partial_fit(X)

    def partial_fit(self, X, y=None) -> "StreamingDVine":
        """Absorb more rows into the pair summaries and trailing window."""
        if not hasattr(self, "sketch_"):
            self.sketch_ = DVineSketch(
                self.d, self.epsilon, n_query=self.n_query
            )
            self.n_seen_ = 0
        arr = _as_finite_2d(X, self.d, "X")
        for row in arr:
            self.sketch_.insert(row)
        self.n_seen_ = self.sketch_.n
        self._model = None  # stale; rebuild lazily on the next query
        return self

    def model(self):
        """The current queryable vine model (rebuilt after new data)."""
        self._check_fitted()
        if getattr(self, "_model", None) is None:
            self._model = self.sketch_.model(grid_m=self.grid_m)
        return self._model

    def predict(self, U) -> np.ndarray:
        """Vine copula values at the query points ``U`` (shape ``(m, d)``)."""
        model = self.model()
        pts = _as_finite_2d(U, self.d, "U")
        return np.array([model.evaluate(row) for row in pts])
