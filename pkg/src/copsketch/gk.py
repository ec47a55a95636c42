"""Epsilon-approximate quantile summaries in the Greenwald-Khanna style.

A summary holds an ordered list of ``(value, g, delta)`` tuples over a stream
of ``n`` real values.  Writing ``r_min(v_i) = g_1 + ... + g_i`` and
``r_max(v_i) = r_min(v_i) + delta_i``, every tuple brackets the rank of its
value inside the stream seen so far: some valid rank assignment places
``v_i`` at a rank in ``[r_min(v_i), r_max(v_i)]``.  Keeping
``g_i + delta_i <= 2 * epsilon * n`` for every tuple past the first is what
makes rank queries answerable to within ``epsilon * n`` (Greenwald and
Khanna, SIGMOD 2001).

The module provides insertion, periodic band compression, quantile and
inverse-CDF queries, and a merge of independently built summaries.  All rank
arithmetic that mixes a float fraction with an integer count goes through
exact ``Fraction`` math so thresholds never wobble with the platform's
rounding.

Summaries are plain mutable containers.  They are not thread-safe: a single
writer may interleave with read-only queries, nothing more.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from fractions import Fraction
from typing import Iterable, Iterator, List, NamedTuple, Sequence, Tuple


class GkTuple(NamedTuple):
    """One summary entry: a stored value with its rank-slack encoding."""

    value: float
    g: int
    delta: int


class RankBounds(NamedTuple):
    """Inclusive bracket ``[r_min, r_max]`` on the rank of a stored value."""

    r_min: int
    r_max: int


def ceil_rank(u: float, n: int) -> int:
    """Smallest integer ``>= u * n``, computed without float round-off.

    ``u`` is taken at its exact binary value, so e.g. ``ceil_rank(0.505, 100)``
    is 51 because the double closest to 0.505 lies a hair above it.
    """
    return math.ceil(Fraction(u) * n)


def _floor_eps_n(epsilon: float, n: int) -> int:
    """Largest integer ``<= epsilon * n``, exactly."""
    return math.floor(Fraction(epsilon) * n)


def _band_limit(epsilon: float, n: int) -> int:
    """Largest integer strictly below ``2 * epsilon * n``.

    Integer sums compare against this instead of the real band so the
    strict inequality is exact.  ``2.0 * epsilon`` is a power-of-two scaling
    and therefore lossless.
    """
    return math.ceil(Fraction(2.0 * epsilon) * n) - 1


def _check_epsilon(epsilon: float) -> float:
    if not isinstance(epsilon, (int, float)) or not math.isfinite(epsilon):
        raise ValueError(f"epsilon must be a finite real, got {epsilon!r}")
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon!r}")
    return epsilon


class QuantileSummary:
    """Mutable epsilon-approximate summary of a stream of finite reals.

    :param epsilon: target rank accuracy as a fraction of the stream length;
        must lie in the open interval ``(0, 0.5)``.

    The three parallel lists ``values``, ``gs`` and ``deltas`` store the
    tuples in nondecreasing value order.  ``count`` is the number of stream
    elements absorbed so far and always equals ``sum(gs)``.
    """

    __slots__ = ("epsilon", "values", "gs", "deltas", "count")

    def __init__(self, epsilon: float) -> None:
        self.epsilon = _check_epsilon(epsilon)
        self.values: List[float] = []
        self.gs: List[int] = []
        self.deltas: List[int] = []
        self.count: int = 0

    # ------------------------------------------------------------------
    # introspection

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return (
            f"QuantileSummary(epsilon={self.epsilon!r}, count={self.count}, "
            f"tuples={len(self.values)})"
        )

    @property
    def tuples(self) -> List[GkTuple]:
        """The stored tuples as a fresh list of :class:`GkTuple`."""
        return [
            GkTuple(v, g, d)
            for v, g, d in zip(self.values, self.gs, self.deltas)
        ]

    @property
    def is_singleton(self) -> bool:
        """True when the summary is exactly one freshly inserted element."""
        return len(self.values) == 1 and self.gs[0] == 1 and self.deltas[0] == 0

    def copy(self) -> "QuantileSummary":
        """Independent deep copy (tuple lists are not shared)."""
        out = QuantileSummary(self.epsilon)
        out.values = list(self.values)
        out.gs = list(self.gs)
        out.deltas = list(self.deltas)
        out.count = self.count
        return out

    # ------------------------------------------------------------------
    # updates

    def insert(self, x: float) -> int:
        """Absorb one stream element and return the index it was stored at.

        New elements enter with ``g = 1``.  An element strictly below the
        current minimum or at/above the current maximum is stored exactly
        (``delta = 0``); anything in between lands after its equal values
        with ``delta = g_next + delta_next - 1`` where *next* is the tuple
        immediately to its right.

        :raises ValueError: if ``x`` is NaN or infinite.
        """
        if not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ValueError(f"stream values must be finite reals, got {x!r}")
        x = float(x)
        pos = bisect_right(self.values, x)
        if pos == 0 or pos == len(self.values):
            # New global minimum, new global maximum, or the very first
            # element: stored exactly.
            delta = 0
        else:
            delta = self.gs[pos] + self.deltas[pos] - 1
        self.values.insert(pos, x)
        self.gs.insert(pos, 1)
        self.deltas.insert(pos, delta)
        self.count += 1
        return pos

    def extend(self, xs: Iterable[float]) -> None:
        """Insert every element of ``xs`` in order (no compression)."""
        for x in xs:
            self.insert(x)

    # ------------------------------------------------------------------
    # compression

    def compress_plan(self, n: int) -> List[Tuple[int, int]]:
        """Plan a right-to-left band compression against stream count ``n``.

        Returns maximal runs ``(m, j)`` of adjacent tuple indices (0-based,
        inclusive, ``m < j``) whose combined weight stays strictly below the
        band ``2 * epsilon * n``:  ``g_m + ... + g_j + delta_j < 2*eps*n``.
        Index 0 is never part of a run, so the stored minimum survives every
        compression.  Runs are reported rightmost first and do not overlap.
        """
        if n < 0:
            raise ValueError(f"stream count must be nonnegative, got {n!r}")
        limit = _band_limit(self.epsilon, n)
        plan: List[Tuple[int, int]] = []
        j = len(self.values) - 1
        while j >= 1:
            gsum = self.gs[j]
            dj = self.deltas[j]
            m = j
            while m - 1 >= 1 and gsum + self.gs[m - 1] + dj <= limit:
                gsum += self.gs[m - 1]
                m -= 1
            if m < j:
                plan.append((m, j))
            j = m - 1
        return plan

    def apply_compress_plan(self, plan: Sequence[Tuple[int, int]]) -> None:
        """Replace each planned run ``(m, j)`` by ``(v_j, sum g, delta_j)``."""
        if not plan:
            return
        starts = {m: j for m, j in plan}
        values: List[float] = []
        gs: List[int] = []
        deltas: List[int] = []
        i = 0
        total = len(self.values)
        while i < total:
            j = starts.get(i)
            if j is None:
                values.append(self.values[i])
                gs.append(self.gs[i])
                deltas.append(self.deltas[i])
                i += 1
            else:
                values.append(self.values[j])
                gs.append(sum(self.gs[i : j + 1]))
                deltas.append(self.deltas[j])
                i = j + 1
        self.values = values
        self.gs = gs
        self.deltas = deltas

    def compress(self, n: int) -> None:
        """Merge adjacent tuple bands whose weight fits under ``2*eps*n``.

        ``n`` is the count of the governing stream at compression time; it is
        passed explicitly because a summary may be compressed against a
        stream larger than its own contents (a sub-stream summary inside a
        larger structure).  ``count`` and the stored extreme values are
        unchanged; when ``2*eps*n < 1`` or fewer than three tuples exist the
        summary is untouched.
        """
        self.apply_compress_plan(self.compress_plan(n))

    # ------------------------------------------------------------------
    # queries

    def ranks(self) -> List[RankBounds]:
        """Per-tuple rank brackets: prefix sums of ``g`` plus ``delta``."""
        out: List[RankBounds] = []
        acc = 0
        for g, d in zip(self.gs, self.deltas):
            acc += g
            out.append(RankBounds(acc, acc + d))
        return out

    def _r_max_iter(self) -> Iterator[int]:
        acc = 0
        for g, d in zip(self.gs, self.deltas):
            acc += g
            yield acc + d

    def quantile(self, u: float) -> float:
        """Value whose stream rank approximates ``ceil(u * n)``.

        Looks up the target rank ``r = ceil(u * count)`` and returns the
        stored value whose rank bracket proves it within ``epsilon * count``
        of ``r``: scanning left to right, the last tuple with
        ``r_max <= r + floor(eps * n)``.  Ranks at or above
        ``n - floor(eps * n)`` short-circuit to the stored maximum.

        :raises ValueError: if the summary is empty or ``u`` is outside
            ``(0, 1]``.
        """
        if self.count == 0:
            raise ValueError("quantile query on an empty summary")
        if not 0.0 < u <= 1.0:
            raise ValueError(f"u must lie in (0, 1], got {u!r}")
        n = self.count
        slack = _floor_eps_n(self.epsilon, n)
        r = ceil_rank(u, n)
        if r >= n - slack:
            return self.values[-1]
        limit = r + slack
        best = None
        for i, rmax in enumerate(self._r_max_iter()):
            if rmax > limit:
                break
            best = i
        if best is None:
            # Every bracket already overshoots r + eps*n; the stored minimum
            # is the only defensible answer (it is exact by construction).
            return self.values[0]
        return self.values[best]

    def inverse_cdf(self, y: float) -> float:
        """Approximate fraction of the stream at or below ``y``.

        Returns ``r_max(v_i) / count`` for the rightmost stored ``v_i <= y``;
        0.0 below the stored minimum and 1.0 at or above the stored maximum.

        :raises ValueError: if the summary is empty.
        """
        if self.count == 0:
            raise ValueError("inverse-CDF query on an empty summary")
        m = self.count
        if y >= self.values[-1]:
            return m / m
        if y < self.values[0]:
            return 0.0
        i = bisect_right(self.values, y) - 1
        acc = 0
        for g in self.gs[: i + 1]:
            acc += g
        return (acc + self.deltas[i]) / m

    # ------------------------------------------------------------------
    # validation

    def validate(self) -> None:
        """Check structural invariants; raise ``ValueError`` on any breach.

        Checked: value order, ``g >= 1``, ``delta >= 0``, ``delta = 0`` on
        the first tuple, and ``count == sum(g)``.
        """
        if len(self.values) != len(self.gs) or len(self.gs) != len(self.deltas):
            raise ValueError("tuple component lists are misaligned")
        for i in range(1, len(self.values)):
            if self.values[i - 1] > self.values[i]:
                raise ValueError(
                    f"values out of order at index {i}: "
                    f"{self.values[i - 1]!r} > {self.values[i]!r}"
                )
        for i, (g, d) in enumerate(zip(self.gs, self.deltas)):
            if g < 1:
                raise ValueError(f"tuple {i} has g={g}; g must be >= 1")
            if d < 0:
                raise ValueError(f"tuple {i} has delta={d}; delta must be >= 0")
        if self.deltas and self.deltas[0] != 0:
            raise ValueError(
                f"first tuple must carry delta=0, got {self.deltas[0]}"
            )
        if self.count != sum(self.gs):
            raise ValueError(
                f"count={self.count} disagrees with sum(g)={sum(self.gs)}"
            )

    def band_invariant_ok(self, n: int) -> bool:
        """True when every tuple past the first has ``g + delta <= 2*eps*n``."""
        bound = math.floor(Fraction(2.0 * self.epsilon) * n)
        return all(
            g + d <= bound
            for g, d in zip(self.gs[1:], self.deltas[1:])
        )


def tuples_from_rank_bounds(
    values: Sequence[float], bounds: Sequence[RankBounds]
) -> List[GkTuple]:
    """Rebuild ``(value, g, delta)`` tuples from rank brackets.

    Inverse of :meth:`QuantileSummary.ranks`:  ``g_i`` is the step between
    consecutive ``r_min`` values and ``delta_i = r_max_i - r_min_i``.
    """
    out: List[GkTuple] = []
    prev = 0
    for v, (rmin, rmax) in zip(values, bounds):
        out.append(GkTuple(v, rmin - prev, rmax - rmin))
        prev = rmin
    return out


def _summary_from_entries(
    epsilon: float, entries: List[Tuple[float, int, int]], count: int
) -> QuantileSummary:
    """Assemble a summary from ``(value, r_min, r_max)`` entries.

    Entries must be value-sorted with nondecreasing ``r_min``.  Entries
    sharing an ``r_min`` (which would decode to ``g = 0``) are collapsed
    into one, keeping the wider ``r_max``; the merge's consistent tie
    ordering keeps all r_min values distinct, so the collapse is a
    guard, and equal r_min at *distinct* values is always an error.  The
    first entry is then pinned to ``delta = 0``: it holds the exact union
    minimum, whose multiplicity is at least its ``r_min``, so tightening
    ``r_max`` down to ``r_min`` keeps the bracket truthful.
    """
    collapsed: List[Tuple[float, int, int]] = []
    for value, rmin, rmax in entries:
        if collapsed and collapsed[-1][1] == rmin:
            pv, prmin, prmax = collapsed[-1]
            if pv != value:
                raise ValueError(
                    "distinct values decoded to the same r_min during merge"
                )
            collapsed[-1] = (pv, prmin, max(prmax, rmax))
        else:
            collapsed.append((value, rmin, rmax))
    if collapsed:
        v0, rmin0, _ = collapsed[0]
        collapsed[0] = (v0, rmin0, rmin0)
    out = QuantileSummary(epsilon)
    prev = 0
    for value, rmin, rmax in collapsed:
        g = rmin - prev
        if g < 1:
            raise ValueError("merge produced a non-positive g")
        out.values.append(value)
        out.gs.append(g)
        out.deltas.append(rmax - rmin)
        prev = rmin
    out.count = count
    if out.gs and prev != count:
        raise ValueError(
            f"merged rank mass {prev} disagrees with combined count {count}"
        )
    return out


def merge(a: QuantileSummary, b: QuantileSummary) -> QuantileSummary:
    """Combine two summaries of disjoint streams into one.

    Both inputs are left untouched.  An empty input yields a copy of the
    other; a one-element input (a tuple ``(v, 1, 0)``) is simply inserted
    into a copy of the other, which is both cheaper and tighter than the
    general path.  Otherwise every value from either input becomes an entry
    whose rank bracket adds the bracket of its own summary to the bracket
    contributed by the neighbouring values of the other summary:

    * ``r_min`` gains the ``r_min`` of the other side's nearest value below
      it (zero when none exists);
    * ``r_max`` gains ``r_max - 1`` of the other side's nearest value above
      it, or the full ``r_max`` of the other side's maximum when nothing
      lies above.

    A value appearing in both inputs needs one consistent tie order, and
    the convention here is that ``b``'s occurrences precede ``a``'s: for
    entries from ``a``, "below" includes the other side's equal values
    (``bisect_right``) while for entries from ``b`` it means strictly below
    (``bisect_left``).  Deciding ties per side instead — each side counting
    the other's equal values as below — would push a shared run's entries
    from *both* inputs toward the tail of the run, leaving its head ranks
    covered by no bracket and quantile queries there unanswerable.

    :raises ValueError: if the two summaries carry different ``epsilon``
        settings (merging those has no single accuracy contract).
    """
    if a.epsilon != b.epsilon:
        raise ValueError(
            f"cannot merge summaries with different epsilon settings "
            f"({a.epsilon!r} vs {b.epsilon!r})"
        )
    if b.count == 0:
        return a.copy()
    if a.count == 0:
        return b.copy()
    if b.is_singleton:
        out = a.copy()
        out.insert(b.values[0])
        return out
    if a.is_singleton:
        out = b.copy()
        out.insert(a.values[0])
        return out

    ranks_a = a.ranks()
    ranks_b = b.ranks()

    def side_entries(
        own: QuantileSummary,
        own_ranks: List[RankBounds],
        other: QuantileSummary,
        other_ranks: List[RankBounds],
        locate,
    ) -> List[Tuple[float, int, int]]:
        entries: List[Tuple[float, int, int]] = []
        for i, v in enumerate(own.values):
            k = locate(other.values, v)
            rmin = own_ranks[i].r_min + (other_ranks[k - 1].r_min if k else 0)
            if k < len(other.values):
                rmax = own_ranks[i].r_max + other_ranks[k].r_max - 1
            else:
                rmax = own_ranks[i].r_max + other_ranks[-1].r_max
            entries.append((v, rmin, rmax))
        return entries

    # One linearisation for both sides: b's copies of a shared value sit
    # before a's, so a-entries count the other side's ties as below them
    # and b-entries do not.
    from_a = side_entries(a, ranks_a, b, ranks_b, bisect_right)
    from_b = side_entries(b, ranks_b, a, ranks_a, bisect_left)

    # Two-pointer union in (value, r_min) order.  Ordering ties by r_min
    # matters: within a shared value, every b-entry carries a smaller
    # pooled r_min than every a-entry and must sort before it for the
    # decoded g's to stay positive.
    entries: List[Tuple[float, int, int]] = []
    ia = ib = 0
    while ia < len(from_a) and ib < len(from_b):
        if from_a[ia][:2] <= from_b[ib][:2]:
            entries.append(from_a[ia])
            ia += 1
        else:
            entries.append(from_b[ib])
            ib += 1
    entries.extend(from_a[ia:])
    entries.extend(from_b[ib:])

    return _summary_from_entries(a.epsilon, entries, a.count + b.count)


def merge_many(summaries: Sequence[QuantileSummary]) -> QuantileSummary:
    """Left fold of :func:`merge` over a nonempty sequence of summaries.

    :raises ValueError: on an empty sequence or mismatched epsilons.
    """
    if not summaries:
        raise ValueError("merge_many needs at least one summary")
    acc = summaries[0]
    for s in summaries[1:]:
        acc = merge(acc, s)
    if acc is summaries[0]:
        acc = acc.copy()
    return acc
