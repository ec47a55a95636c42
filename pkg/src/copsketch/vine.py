"""D-vine pair-copula construction over adjacent-pair copula evaluators.

A ``d``-dimensional stream is modelled through the chain of its adjacent
pairs ``(1,2), (2,3), ..., (d-1,d)``.  Higher trees condition each pair on
the variables sitting between its endpoints: tree ``j`` holds the pairs
``(i, i+j)`` given ``{i+1, ..., i+j-1}``, for a total of ``d*(d-1)/2``
pair copulas.  Under the simplifying assumption that each conditional pair
copula does not vary with the value conditioned on, the joint copula is the
product of all of them evaluated at conditioned uniforms.

The conditioned uniforms follow the recursion

* ``a(i, 1) = u_i`` and ``b(i, 1) = u_{i+1}``,
* ``a(i, j+1) = integral of C_{i,j}(t, b(i, j)) for t in [0, a(i, j)]``,
* ``b(i, j+1) = integral of C_{i+1,j}(a(i+1, j), t) for t in [0, b(i+1, j)]``,

where ``C_{i,j}`` is the pair evaluator of ``(i, i+j)``.  The conditioning
integral deliberately integrates the *copula itself* (a trapezoidal rule on
``grid_m`` panels), not a partial derivative; the conditional evaluators for
trees ``j >= 2`` are exact empirical copulas over *pseudo-data*: the
conditioned uniforms of a trailing window of ``n_query`` raw rows, mapped
back through the marginal quantiles.

Tree-1 evaluators and marginals are pluggable, so the same construction runs
off streaming summaries (:class:`copsketch.copula.FrozenCopulaEvaluator`) or
off exact in-memory empirical copulas, and the two variants can be compared
point by point.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .copula import CopulaSummary, FrozenCopulaEvaluator
from .exact import DataBuffer, ExactCopulaEvaluator, copula_evaluator
from .gk import ceil_rank

#: Trailing-window length used for pseudo-data when none is specified.
DEFAULT_QUERY_WINDOW = 1000
#: Trapezoid panel count used for conditioning integrals by default.
DEFAULT_GRID_PANELS = 100

CopulaFn = Callable[[float, float], float]


class PairSpec(NamedTuple):
    """One pair copula of the vine: variables ``(left, right)`` conditioned
    on the in-between set ``conditioned`` (empty in tree 1)."""

    left: int
    right: int
    conditioned: Tuple[int, ...]

    @property
    def level(self) -> int:
        return self.right - self.left


def conditioning_sets(d: int) -> List[PairSpec]:
    """All ``d*(d-1)/2`` pair specs of the ``d``-dimensional D-vine.

    Ordered tree by tree: level ``j`` lists ``(i, i+j)`` conditioned on
    ``{i+1, ..., i+j-1}`` for ``i = 1..d-j``.

    :raises ValueError: if ``d < 2``.
    """
    if d < 2:
        raise ValueError(f"a vine needs d >= 2 dimensions, got {d}")
    out: List[PairSpec] = []
    for j in range(1, d):
        for i in range(1, d - j + 1):
            out.append(PairSpec(i, i + j, tuple(range(i + 1, i + j))))
    return out


def h_integral(
    copula: CopulaFn, u_upper: float, v: float, panels: int
) -> float:
    """Trapezoidal ``integral of copula(t, v) dt over [0, u_upper]``.

    :param panels: number of equal panels; at least 2.
    :raises ValueError: on ``panels < 2`` or ``u_upper``/``v`` outside
        ``[0, 1]``.
    """
    if panels < 2:
        raise ValueError(f"need at least 2 trapezoid panels, got {panels}")
    if not 0.0 <= u_upper <= 1.0:
        raise ValueError(f"u_upper must lie in [0, 1], got {u_upper!r}")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"v must lie in [0, 1], got {v!r}")
    if u_upper == 0.0:
        return 0.0
    acc = 0.5 * (copula(0.0, v) + copula(u_upper, v))
    for k in range(1, panels):
        acc += copula(u_upper * k / panels, v)
    return acc * (u_upper / panels)


def h_integral_second(
    copula: CopulaFn, u_upper: float, v: float, panels: int
) -> float:
    """Trapezoidal ``integral of copula(v, t) dt over [0, u_upper]``."""
    return h_integral(lambda t, w: copula(w, t), u_upper, v, panels)


def conditional_copula(buf: DataBuffer) -> ExactCopulaEvaluator:
    """Exact empirical copula closed over a pseudo-data buffer.

    The evaluator selects the rows whose first pseudo-coordinate sits at or
    below the queried quantile and counts, inside that slab, the second
    coordinates under their own quantile — the factored empirical form,
    which equals the direct double-indicator count bit for bit.
    """
    return copula_evaluator(buf)


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


class DVineModel:
    """Built D-vine: pair evaluators for every tree plus query recursion.

    Construction consumes the injected tree-1 evaluators and marginals and a
    trailing window of raw rows; it computes the conditioned uniforms of the
    window (the *pseudo-observations*), maps them through the marginal
    quantiles into *pseudo-data*, and fits the conditional trees' exact
    empirical copulas on those buffers.  ``evaluate`` then runs the same
    recursion on a single query point.

    :param pair_copulas: tree-1 evaluators, ``pair_copulas[i-1]`` for the
        adjacent pair ``(i, i+1)``; callables over the closed unit square.
    :param marginal_cdf: ``(component, x) -> u`` for components ``1..d``.
    :param marginal_quantile: ``(component, u) -> x``; ``u = 0`` must yield
        the marginal minimum.
    :param window_rows: array-like ``(k, d)`` of the trailing raw rows.
    :param grid_m: trapezoid panels for every conditioning integral.
    """

    def __init__(
        self,
        pair_copulas: Sequence[CopulaFn],
        marginal_cdf: Callable[[int, float], float],
        marginal_quantile: Callable[[int, float], float],
        window_rows,
        grid_m: int = DEFAULT_GRID_PANELS,
    ) -> None:
        rows = np.asarray(window_rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise ValueError(
                f"need a (k, d) window with k >= 2 rows, got shape {rows.shape}"
            )
        d = rows.shape[1]
        if d < 2:
            raise ValueError(f"a vine needs d >= 2 dimensions, got {d}")
        if len(pair_copulas) != d - 1:
            raise ValueError(
                f"{d} dimensions need {d - 1} adjacent-pair evaluators, "
                f"got {len(pair_copulas)}"
            )
        if grid_m < 2:
            raise ValueError(f"grid_m must be at least 2, got {grid_m}")
        self.d = d
        self.grid_m = int(grid_m)
        self.window_size = rows.shape[0]
        self._evals: Dict[Tuple[int, int], CopulaFn] = {
            (i, 1): pair_copulas[i - 1] for i in range(1, d)
        }
        self._pseudo_data: Dict[Tuple[int, int], DataBuffer] = {}

        k = rows.shape[0]
        uhat = {
            i: np.array(
                [_clamp01(marginal_cdf(i, x)) for x in rows[:, i - 1]]
            )
            for i in range(1, d + 1)
        }
        a: Dict[Tuple[int, int], np.ndarray] = {}
        b: Dict[Tuple[int, int], np.ndarray] = {}
        for i in range(1, d):
            a[(i, 1)] = uhat[i]
            b[(i, 1)] = uhat[i + 1]

        # Conditioned uniforms of the window, both directions per pair.
        self._h_left: Dict[Tuple[int, int], np.ndarray] = {}
        self._h_right: Dict[Tuple[int, int], np.ndarray] = {}
        top = d - 1
        for j in range(1, top):
            for i in range(1, d - j + 1):
                cop = self._evals[(i, j)]
                ai, bi = a[(i, j)], b[(i, j)]
                hl = np.empty(k)
                hr = np.empty(k)
                for t in range(k):
                    hl[t] = _clamp01(
                        h_integral(cop, ai[t], bi[t], self.grid_m)
                    )
                    hr[t] = _clamp01(
                        h_integral_second(cop, bi[t], ai[t], self.grid_m)
                    )
                self._h_left[(i, j)] = hl
                self._h_right[(i, j)] = hr
            for i in range(1, d - j):
                a[(i, j + 1)] = self._h_left[(i, j)]
                b[(i, j + 1)] = self._h_right[(i + 1, j)]
                left = np.array(
                    [marginal_quantile(i, u) for u in a[(i, j + 1)]]
                )
                right = np.array(
                    [marginal_quantile(i + j + 1, u) for u in b[(i, j + 1)]]
                )
                buf = DataBuffer(np.column_stack([left, right]))
                self._pseudo_data[(i, j + 1)] = buf
                self._evals[(i, j + 1)] = conditional_copula(buf)
        if d == 2:
            # No conditional trees; still expose the adjacent-pair
            # conditioned uniforms for inspection.
            cop = self._evals[(1, 1)]
            hl = np.empty(k)
            hr = np.empty(k)
            for t in range(k):
                hl[t] = _clamp01(
                    h_integral(cop, a[(1, 1)][t], b[(1, 1)][t], self.grid_m)
                )
                hr[t] = _clamp01(
                    h_integral_second(
                        cop, b[(1, 1)][t], a[(1, 1)][t], self.grid_m
                    )
                )
            self._h_left[(1, 1)] = hl
            self._h_right[(1, 1)] = hr

    # ------------------------------------------------------------------

    def pair_evaluator(self, left: int, level: int) -> CopulaFn:
        """Evaluator of the pair ``(left, left + level)``."""
        return self._evals[(left, level)]

    def pseudo_observations(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """Window uniforms of adjacent pair ``(i, i+1)`` conditioned both
        ways: ``(u_i given u_{i+1}, u_{i+1} given u_i)``."""
        return self._h_left[(i, 1)].copy(), self._h_right[(i, 1)].copy()

    def pseudo_data(self, left: int, level: int) -> DataBuffer:
        """Pseudo-data buffer of conditional pair ``(left, left + level)``
        (``level >= 2``)."""
        return self._pseudo_data[(left, level)]

    def evaluate(self, u: Sequence[float]) -> float:
        """Vine copula value at ``u``: product of all pair evaluators at
        their conditioned arguments, clamped into ``[0, 1]``.

        :raises ValueError: if ``u`` has the wrong length or any coordinate
            is outside ``(0, 1]``.
        """
        point = [float(x) for x in u]
        if len(point) != self.d:
            raise ValueError(
                f"expected a point of dimension {self.d}, got {len(point)}"
            )
        for x in point:
            if not 0.0 < x <= 1.0:
                raise ValueError(
                    f"coordinates must lie in (0, 1], got {x!r}"
                )
        d = self.d
        a: Dict[Tuple[int, int], float] = {}
        b: Dict[Tuple[int, int], float] = {}
        for i in range(1, d):
            a[(i, 1)] = point[i - 1]
            b[(i, 1)] = point[i]
        prod = 1.0
        for j in range(1, d):
            for i in range(1, d - j + 1):
                prod *= self._evals[(i, j)](a[(i, j)], b[(i, j)])
            if j == d - 1:
                break
            for i in range(1, d - j):
                a[(i, j + 1)] = _clamp01(
                    h_integral(
                        self._evals[(i, j)], a[(i, j)], b[(i, j)], self.grid_m
                    )
                )
                b[(i, j + 1)] = _clamp01(
                    h_integral_second(
                        self._evals[(i + 1, j)],
                        b[(i + 1, j)],
                        a[(i + 1, j)],
                        self.grid_m,
                    )
                )
        return _clamp01(prod)


# ----------------------------------------------------------------------
# ready-made wirings


def summary_vine(
    summaries: Sequence[CopulaSummary],
    window_rows,
    grid_m: int = DEFAULT_GRID_PANELS,
) -> DVineModel:
    """Vine over frozen streaming summaries of the adjacent pairs.

    ``summaries[i-1]`` must summarise the pair ``(x_i, x_{i+1})`` of the
    same underlying stream.  Component ``i <= d-1`` takes its marginal from
    the first margin of summary ``i``; component ``d`` from the second
    margin of the last summary.
    """
    if not summaries:
        raise ValueError("need at least one adjacent-pair summary")
    counts = {s.n for s in summaries}
    if len(counts) != 1:
        raise ValueError(
            f"adjacent-pair summaries disagree on stream length: {counts}"
        )
    frozen = [s.freeze() for s in summaries]
    d = len(summaries) + 1

    def which(component: int) -> Tuple[FrozenCopulaEvaluator, int]:
        if not 1 <= component <= d:
            raise ValueError(f"component {component} outside 1..{d}")
        if component <= d - 1:
            return frozen[component - 1], 1
        return frozen[d - 2], 2

    def marginal_cdf(component: int, x: float) -> float:
        ev, side = which(component)
        return ev.marginal_cdf(side, x)

    def marginal_quantile(component: int, u: float) -> float:
        ev, side = which(component)
        if u <= 0.0:
            return ev.marginal_minimum(side)
        return ev.marginal_quantile(side, min(u, 1.0))

    return DVineModel(frozen, marginal_cdf, marginal_quantile,
                      window_rows, grid_m)


def exact_vine(
    data,
    n_query: int = DEFAULT_QUERY_WINDOW,
    grid_m: int = DEFAULT_GRID_PANELS,
) -> DVineModel:
    """Vine over exact empirical copulas of the full in-memory data.

    Tree-1 evaluators and marginals use every row of ``data``; the
    pseudo-data window is restricted to the trailing ``n_query`` rows, so a
    like-for-like comparison against a summary-backed vine restricts both
    sides identically.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError(f"need an (n, d>=2) array, got shape {arr.shape}")
    if n_query < 2:
        raise ValueError(f"n_query must be at least 2, got {n_query}")
    n, d = arr.shape
    pair_copulas = [
        ExactCopulaEvaluator(arr[:, i], arr[:, i + 1]) for i in range(d - 1)
    ]
    sorted_cols = [np.sort(arr[:, i], kind="stable") for i in range(d)]

    def marginal_cdf(component: int, x: float) -> float:
        col = sorted_cols[component - 1]
        return int(np.searchsorted(col, x, side="right")) / n

    def marginal_quantile(component: int, u: float) -> float:
        col = sorted_cols[component - 1]
        r = max(1, ceil_rank(min(max(u, 0.0), 1.0), n))
        return float(col[r - 1])

    window = arr[-n_query:]
    return DVineModel(pair_copulas, marginal_cdf, marginal_quantile,
                      window, grid_m)


class DVineSketch:
    """Streaming front end: adjacent-pair summaries plus a trailing window.

    Feed ``d``-dimensional rows with :meth:`insert`; :meth:`model` freezes
    the summaries and builds a :class:`DVineModel` on the last
    ``min(n, n_query)`` rows.  Space is the ``d - 1`` pair summaries plus
    the fixed window.
    """

    def __init__(
        self,
        d: int,
        epsilon: float,
        n_query: int = DEFAULT_QUERY_WINDOW,
        compress_every_insert: bool = False,
    ) -> None:
        if d < 2:
            raise ValueError(f"a vine needs d >= 2 dimensions, got {d}")
        if n_query < 2:
            raise ValueError(f"n_query must be at least 2, got {n_query}")
        self.d = d
        self.n_query = int(n_query)
        self.summaries = [
            CopulaSummary(epsilon, compress_every_insert=compress_every_insert)
            for _ in range(d - 1)
        ]
        self.window: deque = deque(maxlen=self.n_query)
        self.n = 0

    def insert(self, row: Sequence[float]) -> None:
        """Absorb one raw row into every adjacent-pair summary."""
        vals = [float(x) for x in row]
        if len(vals) != self.d:
            raise ValueError(
                f"expected rows of dimension {self.d}, got {len(vals)}"
            )
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"stream rows must be finite, got {row!r}")
        for i in range(self.d - 1):
            self.summaries[i].insert(vals[i], vals[i + 1])
        self.window.append(tuple(vals))
        self.n += 1

    def model(self, grid_m: int = DEFAULT_GRID_PANELS) -> DVineModel:
        """Freeze current state into a queryable vine model."""
        if len(self.window) < 2:
            raise ValueError("need at least 2 buffered rows to build a model")
        return summary_vine(self.summaries, np.array(self.window), grid_m)
