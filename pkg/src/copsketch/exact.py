"""Exact in-memory reference computations for empirical copulas.

Everything here materialises the data and answers queries by brute-force
counting.  These routines exist to be compared against: the streaming
summaries elsewhere in the package are validated by checking their answers
against these exact ones on streams small enough to keep around.

Rank conventions match the summaries: the ``u``-quantile of a column of
``n`` values is its ``ceil(u * n)``-th order statistic, with the ceiling
taken on the exact binary value of ``u`` (see :func:`copsketch.gk.ceil_rank`).
"""

from __future__ import annotations

from typing import Callable, Sequence, Tuple

import numpy as np

from .gk import ceil_rank

#: Default hard cap on how many points a buffer will hold.  Exact counting
#: is O(n) per query and O(n) memory; past this size the streaming summaries
#: are the only practical route.
DEFAULT_CAPACITY = 1_000_000


class DataBuffer:
    """Immutable column store of finite real vectors.

    :param columns: array-like of shape ``(n, d)`` with ``d >= 1``.
    :param capacity: maximum admissible ``n`` (default one million points).

    :raises ValueError: on empty input, non-finite entries, or overflow of
        the configured capacity.
    """

    __slots__ = ("data",)

    def __init__(self, columns, capacity: int = DEFAULT_CAPACITY) -> None:
        arr = np.asarray(columns, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(
                f"expected a nonempty (n, d) array, got shape {arr.shape}"
            )
        if arr.shape[0] > capacity:
            raise ValueError(
                f"buffer of {arr.shape[0]} rows exceeds capacity {capacity}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("buffer rows must be finite")
        self.data = arr
        self.data.setflags(write=False)

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def column(self, index: int) -> np.ndarray:
        """Read-only view of the 0-based ``index``-th column."""
        return self.data[:, index]


def empirical_inverse_cdf(column: Sequence[float], u: float) -> float:
    """``ceil(u * n)``-th order statistic of ``column``.

    :raises ValueError: on an empty column or ``u`` outside ``(0, 1]``.
    """
    arr = np.asarray(column, dtype=np.float64)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("inverse CDF of an empty column")
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u must lie in (0, 1], got {u!r}")
    r = ceil_rank(u, n)
    return float(np.sort(arr, kind="stable")[r - 1])


def empirical_cdf(column: Sequence[float], y: float) -> float:
    """Fraction of ``column`` at or below ``y``."""
    arr = np.asarray(column, dtype=np.float64)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("CDF of an empty column")
    return int(np.count_nonzero(arr <= y)) / n


def n1_exact(buf: DataBuffer, u1: float) -> int:
    """Exact count of rows whose first component sits at or below the
    ``u1``-quantile of the first column.

    Ties are counted inclusively, so with duplicated values the result can
    exceed ``ceil(u1 * n)``.
    """
    col = buf.column(0)
    threshold = empirical_inverse_cdf(col, u1)
    return int(np.count_nonzero(col <= threshold))


def empirical_copula(buf: DataBuffer, u1: float, u2: float) -> float:
    """Bivariate empirical copula of the buffer at ``(u1, u2)``.

    Counts rows dominated componentwise by the per-column ``u``-quantiles
    and divides by ``n``.
    """
    if buf.width < 2:
        raise ValueError("empirical copula needs at least two columns")
    x1 = buf.column(0)
    x2 = buf.column(1)
    t1 = empirical_inverse_cdf(x1, u1)
    t2 = empirical_inverse_cdf(x2, u2)
    joint = int(np.count_nonzero((x1 <= t1) & (x2 <= t2)))
    return joint / len(buf)


def empirical_copula_factored(
    buf: DataBuffer, u1: float, u2: float
) -> float:
    """Empirical copula computed through the conditional-slab route.

    First selects the index set ``I`` of rows whose first component is at or
    below the ``u1``-quantile, then counts, inside that slab only, the second
    components at or below the ``u2``-quantile of the *full* second column.
    The result is the joint count over ``n`` and agrees bit for bit with
    :func:`empirical_copula` — both are the same integer ratio, assembled
    along different routes.
    """
    if buf.width < 2:
        raise ValueError("empirical copula needs at least two columns")
    x1 = buf.column(0)
    x2 = buf.column(1)
    t1 = empirical_inverse_cdf(x1, u1)
    t2 = empirical_inverse_cdf(x2, u2)
    slab = x2[x1 <= t1]
    joint = int(np.count_nonzero(slab <= t2))
    return joint / len(buf)


class ExactCopulaEvaluator:
    """Callable exact copula with presorted internals for repeated queries.

    Evaluates exactly like :func:`empirical_copula` on the wrapped pair of
    columns, with two extensions convenient for numerical integration:
    either argument equal to 0 yields 0.0 (the copula's boundary value), and
    arguments are accepted over the closed interval ``[0, 1]``.
    """

    __slots__ = ("_sorted1", "_sorted2", "_x2_by_x1", "_n")

    def __init__(self, x1: Sequence[float], x2: Sequence[float]) -> None:
        a1 = np.asarray(x1, dtype=np.float64)
        a2 = np.asarray(x2, dtype=np.float64)
        if a1.ndim != 1 or a1.shape != a2.shape or a1.shape[0] == 0:
            raise ValueError("need two equally long nonempty columns")
        if not (np.isfinite(a1).all() and np.isfinite(a2).all()):
            raise ValueError("columns must be finite")
        self._n = a1.shape[0]
        order = np.argsort(a1, kind="stable")
        self._sorted1 = a1[order]
        self._x2_by_x1 = a2[order]
        self._sorted2 = np.sort(a2, kind="stable")

    @property
    def n(self) -> int:
        return self._n

    def __call__(self, u1: float, u2: float) -> float:
        if not 0.0 <= u1 <= 1.0 or not 0.0 <= u2 <= 1.0:
            raise ValueError(f"arguments must lie in [0, 1], got {(u1, u2)!r}")
        if u1 == 0.0 or u2 == 0.0:
            return 0.0
        n = self._n
        t1 = self._sorted1[ceil_rank(u1, n) - 1]
        t2 = self._sorted2[ceil_rank(u2, n) - 1]
        c1 = int(np.searchsorted(self._sorted1, t1, side="right"))
        joint = int(np.count_nonzero(self._x2_by_x1[:c1] <= t2))
        return joint / n


def copula_evaluator(buf: DataBuffer) -> Callable[[float, float], float]:
    """Exact copula evaluator closed over the buffer's first two columns."""
    if buf.width < 2:
        raise ValueError("copula evaluator needs at least two columns")
    return ExactCopulaEvaluator(buf.column(0), buf.column(1))
