"""Streaming summary of a bivariate stream answering empirical-copula queries.

The structure keeps one quantile summary over the first components and, for
every tuple of that outer summary, an aligned quantile subsummary holding the
second components of exactly the stream elements that tuple absorbed.  A
copula query ``(u1, u2)`` then proceeds in three approximations:

1. locate the outer tuple covering the ``u1``-quantile of the first margin
   (the *covering index*);
2. merge the subsummaries at or below it — their pooled count estimates how
   many stream elements fall in the lower-``u1`` slab;
3. read the ``u2``-quantile off the merge of *all* subsummaries and ask the
   slab merge what fraction of it lies at or below that value.

Each step inherits the rank accuracy of its quantile summaries, and the
stacked result carries a ``5 * epsilon`` additive error bound against the
exact empirical copula of the full stream.

Every query recomputes its merges from the live subsummaries; nothing is
cached behind the caller's back.  For query-heavy workloads (numerical
integration, grid sweeps) :class:`FrozenCopulaEvaluator` snapshots the
summary once and reuses precomputed prefix merges, returning bit-identical
values.

Single-writer discipline applies: interleave ``insert`` with queries from
one thread only.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .gk import (
    QuantileSummary,
    _check_epsilon,
    _floor_eps_n,
    ceil_rank,
    merge,
    merge_many,
)

SERIAL_MAGIC = "copsum"
SERIAL_VERSION = 1

#: Fixed accounting model for :meth:`CopulaSummary.size_report`:
#: a tuple is one float plus two small ints, an object header rounds to 16.
BYTES_PER_TUPLE = 24
BYTES_PER_SUMMARY = 16


class SummaryFormatError(ValueError):
    """The serialized text is structurally malformed or the wrong version."""


class SummaryInvariantError(ValueError):
    """The serialized text parses but contradicts the structure's invariants
    (tampered counts, misaligned blocks, out-of-order values, ...)."""


class CopulaQueryResult(NamedTuple):
    """Outcome of one copula query.

    ``value`` approximates the empirical copula; ``lower_count`` is the
    estimated number of stream elements in the lower-``u1`` slab;
    ``covering_index`` is the 1-based outer tuple index the slab reaches up
    to; ``error_bound`` is the additive ``5 * epsilon`` guarantee carried by
    the estimate.  ``degenerate`` marks the defensive empty-slab branch
    (value pinned to 0.0), which no reachable state produces.
    """

    value: float
    lower_count: int
    covering_index: int
    error_bound: float
    degenerate: bool = False


class SizeReport(NamedTuple):
    """Space accounting snapshot of a :class:`CopulaSummary`."""

    outer_tuples: int
    sub_lengths: Tuple[int, ...]
    total_tuples: int
    summaries: int
    estimated_bytes: int


class CopulaSummary:
    """Mergeable-summary sketch of a stream of ``(x1, x2)`` pairs.

    :param epsilon: rank accuracy of every constituent summary, in
        ``(0, 0.5)``.  Copula queries carry a ``5 * epsilon`` bound.
    :param compress_every_insert: compress after every insertion instead of
        every ``floor(1 / (2 * epsilon))`` insertions.  Minimises space at a
        per-insert cost; answers keep the same guarantees.
    """

    __slots__ = ("epsilon", "s1", "subs", "n", "combine_period",
                 "compress_every_insert")

    def __init__(
        self, epsilon: float, compress_every_insert: bool = False
    ) -> None:
        self.epsilon = _check_epsilon(epsilon)
        self.s1 = QuantileSummary(self.epsilon)
        self.subs: List[QuantileSummary] = []
        self.n = 0
        self.combine_period = int(math.floor(1.0 / (2.0 * self.epsilon)))
        self.compress_every_insert = bool(compress_every_insert)

    # ------------------------------------------------------------------
    # updates

    def insert(self, x1: float, x2: float) -> None:
        """Absorb one pair; compress when the schedule says so.

        The first component goes into the outer summary; the second starts
        its own one-element subsummary spliced in at the same position, so
        outer tuples and subsummaries stay aligned.  Compression triggers
        after placement, when the updated count hits the combine period
        (or always, under ``compress_every_insert``).

        :raises ValueError: if either component is NaN or infinite.
        """
        for name, x in (("x1", x1), ("x2", x2)):
            if not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ValueError(
                    f"stream values must be finite reals, got {name}={x!r}"
                )
        pos = self.s1.insert(x1)
        sub = QuantileSummary(self.epsilon)
        sub.insert(x2)
        self.subs.insert(pos, sub)
        self.n += 1
        if self.compress_every_insert or self.n % self.combine_period == 0:
            self.combine()

    def combine(self) -> None:
        """Compress the outer summary and fold subsummaries along with it.

        Outer tuple bands are merged under the ``2 * epsilon * n`` rule of
        :meth:`QuantileSummary.compress_plan` (``n`` being the live stream
        count).  The subsummaries of each merged band are themselves merged
        left to right and then internally compressed against *their own*
        element count: a subsummary governs only the second components it
        absorbed, and holding each one to ``2 * epsilon * (own count)`` is
        what keeps any merge of subsummaries an epsilon-accurate summary of
        the pooled elements — the accuracy every query path leans on.
        Alignment and the total count are preserved; with two or fewer outer
        tuples nothing changes.
        """
        plan = self.s1.compress_plan(self.n)
        if not plan:
            return
        starts = {m: j for m, j in plan}
        new_subs: List[QuantileSummary] = []
        i = 0
        total = len(self.subs)
        while i < total:
            j = starts.get(i)
            if j is None:
                new_subs.append(self.subs[i])
                i += 1
            else:
                merged = merge_many(self.subs[i : j + 1])
                merged.compress(merged.count)
                new_subs.append(merged)
                i = j + 1
        self.s1.apply_compress_plan(plan)
        self.subs = new_subs

    def extend(self, pairs) -> None:
        """Insert every ``(x1, x2)`` of an iterable, in order."""
        for x1, x2 in pairs:
            self.insert(x1, x2)

    # ------------------------------------------------------------------
    # queries

    def _require_data(self) -> None:
        if self.n == 0:
            raise ValueError("query on an empty copula summary")

    def covering_index(self, u1: float) -> int:
        """1-based index of the last outer tuple at or below the ``u1``
        marginal quantile.

        The outer quantile query returns a stored value; the covering index
        is the rightmost tuple holding a value less than or equal to it, so
        the slab ``1..covering_index`` is never empty.
        """
        self._require_data()
        q = self.s1.quantile(u1)
        return bisect_right(self.s1.values, q)

    def lower_count(self, index: int) -> int:
        """Total elements absorbed by subsummaries ``1..index`` (1-based).

        :raises IndexError: if ``index`` is outside ``1..len(subs)``.
        """
        if not 1 <= index <= len(self.subs):
            raise IndexError(
                f"covering index {index} outside 1..{len(self.subs)}"
            )
        return sum(s.count for s in self.subs[:index])

    def merged_second(self, upto: Optional[int] = None) -> QuantileSummary:
        """Merge of subsummaries ``1..upto`` (all of them by default)."""
        self._require_data()
        subs = self.subs if upto is None else self.subs[:upto]
        return merge_many(subs)

    def copula(self, u1: float, u2: float) -> CopulaQueryResult:
        """Approximate empirical copula at ``(u1, u2)``.

        Merges the covering-slab subsummaries (slab count ``lower_count``)
        and all subsummaries (the full second margin), reads the second
        margin's ``u2``-quantile, and returns
        ``(lower_count / n) * slab_fraction_at_or_below_it``.  The result is
        within ``5 * epsilon`` of the exact empirical copula of the stream.

        :raises ValueError: on an empty summary or arguments outside
            ``(0, 1]``.
        """
        self._require_data()
        for name, u in (("u1", u1), ("u2", u2)):
            if not 0.0 < u <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {u!r}")
        bound = 5.0 * self.epsilon
        e = self.covering_index(u1)
        p1 = merge_many(self.subs[:e])
        n_lower = p1.count
        if n_lower == 0:  # defensive; subsummaries always hold >= 1 element
            return CopulaQueryResult(0.0, 0, e, bound, degenerate=True)
        p2 = merge_many(self.subs)
        q = p2.quantile(u2)
        frac = p1.inverse_cdf(q)
        value = (n_lower / self.n) * frac
        return CopulaQueryResult(value, n_lower, e, bound)

    def marginal_quantile(self, component: int, u: float) -> float:
        """Marginal ``u``-quantile of component 1 or 2.

        Component 1 queries the outer summary directly; component 2 merges
        all subsummaries first.  True rank is within ``epsilon * n`` of
        ``ceil(u * n)``.
        """
        self._require_data()
        if component == 1:
            return self.s1.quantile(u)
        if component == 2:
            return self.merged_second().quantile(u)
        raise ValueError(f"component must be 1 or 2, got {component!r}")

    def marginal_cdf(self, component: int, y: float) -> float:
        """Approximate marginal CDF at ``y`` (within ``3 * epsilon``)."""
        self._require_data()
        if component == 1:
            return self.s1.inverse_cdf(y)
        if component == 2:
            return self.merged_second().inverse_cdf(y)
        raise ValueError(f"component must be 1 or 2, got {component!r}")

    # ------------------------------------------------------------------
    # accounting

    def total_tuples(self) -> int:
        """Tuples held across the outer summary and every subsummary."""
        return len(self.s1.values) + sum(len(s.values) for s in self.subs)

    def size_report(self) -> SizeReport:
        """Space snapshot under the fixed cost model
        (:data:`BYTES_PER_TUPLE` per tuple, :data:`BYTES_PER_SUMMARY` per
        summary object including the outer one)."""
        sub_lengths = tuple(len(s.values) for s in self.subs)
        total = len(self.s1.values) + sum(sub_lengths)
        summaries = 1 + len(self.subs)
        return SizeReport(
            outer_tuples=len(self.s1.values),
            sub_lengths=sub_lengths,
            total_tuples=total,
            summaries=summaries,
            estimated_bytes=BYTES_PER_TUPLE * total
            + BYTES_PER_SUMMARY * summaries,
        )

    def validate(self) -> None:
        """Check cross-summary invariants; ``ValueError`` on any breach."""
        self.s1.validate()
        for i, sub in enumerate(self.subs, start=1):
            try:
                sub.validate()
            except ValueError as exc:
                raise ValueError(f"subsummary {i}: {exc}") from exc
        if len(self.subs) != len(self.s1.values):
            raise ValueError(
                f"{len(self.subs)} subsummaries misaligned with "
                f"{len(self.s1.values)} outer tuples"
            )
        if self.n != self.s1.count:
            raise ValueError(
                f"stream count {self.n} disagrees with outer summary "
                f"count {self.s1.count}"
            )
        total = sum(s.count for s in self.subs)
        if self.n != total:
            raise ValueError(
                f"stream count {self.n} disagrees with pooled subsummary "
                f"count {total}"
            )
        for i, (g, sub) in enumerate(zip(self.s1.gs, self.subs), start=1):
            if g != sub.count:
                raise ValueError(
                    f"outer tuple {i} has g={g} but its subsummary "
                    f"holds {sub.count} elements"
                )

    # ------------------------------------------------------------------
    # serialization

    def to_text(self) -> str:
        """Serialize to the versioned ``copsum`` text format.

        Line 1 is ``copsum 1 epsilon=<e> n=<n> L=<L>``; then an ``S1 <L>``
        block with one ``value g delta`` line per outer tuple; then, for
        each subsummary ``i``, a ``SUB <i> <len>`` block in the same shape.
        Floats use shortest round-trip decimals, so parsing reproduces
        bit-identical values.
        """
        lines = [
            f"{SERIAL_MAGIC} {SERIAL_VERSION} epsilon={self.epsilon!r} "
            f"n={self.n} L={len(self.subs)}"
        ]
        lines.append(f"S1 {len(self.s1.values)}")
        for v, g, d in zip(self.s1.values, self.s1.gs, self.s1.deltas):
            lines.append(f"{v!r} {g} {d}")
        for i, sub in enumerate(self.subs, start=1):
            lines.append(f"SUB {i} {len(sub.values)}")
            for v, g, d in zip(sub.values, sub.gs, sub.deltas):
                lines.append(f"{v!r} {g} {d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(
        cls, text: str, compress_every_insert: bool = False
    ) -> "CopulaSummary":
        """Parse the ``copsum`` text format and re-validate every invariant.

        :raises SummaryFormatError: malformed structure, unknown magic, or
            unsupported version — the message names the offending line.
        :raises SummaryInvariantError: well-formed text whose fields
            contradict each other (tampered counts, misalignment, invalid
            tuples).
        """
        lines = text.splitlines()
        if not lines:
            raise SummaryFormatError("line 1: empty input")

        def fail(lineno: int, msg: str) -> SummaryFormatError:
            return SummaryFormatError(f"line {lineno}: {msg}")

        header = lines[0].split()
        if len(header) != 5 or header[0] != SERIAL_MAGIC:
            raise fail(1, f"expected '{SERIAL_MAGIC} <version> epsilon=..."
                          f" n=... L=...'")
        if header[1] != str(SERIAL_VERSION):
            raise fail(1, f"unsupported version {header[1]!r}; "
                          f"this reader handles version {SERIAL_VERSION}")
        fields = {}
        for tok in header[2:]:
            key, sep, val = tok.partition("=")
            if not sep or key not in ("epsilon", "n", "L") or key in fields:
                raise fail(1, f"bad header field {tok!r}")
            fields[key] = val
        try:
            epsilon = float(fields["epsilon"])
            n = int(fields["n"])
            big_l = int(fields["L"])
        except (KeyError, ValueError) as exc:
            raise fail(1, f"unparseable header values: {exc}") from None
        if n < 0 or big_l < 0:
            raise SummaryInvariantError(
                f"line 1: negative n={n} or L={big_l}"
            )

        cursor = 1

        def read_block(tag: Sequence[str]) -> Tuple[QuantileSummary, int]:
            nonlocal cursor
            if cursor >= len(lines):
                raise fail(len(lines) + 1,
                           f"unexpected end of input, wanted '{' '.join(tag)}'")
            head = lines[cursor].split()
            lineno = cursor + 1
            if len(head) != len(tag) + 1 or head[: len(tag)] != list(tag):
                raise fail(lineno, f"expected '{' '.join(tag)} <len>' block")
            try:
                length = int(head[-1])
            except ValueError:
                raise fail(lineno, f"bad block length {head[-1]!r}") from None
            if length < 0:
                raise fail(lineno, f"negative block length {length}")
            cursor += 1
            summary = QuantileSummary.__new__(QuantileSummary)
            summary.epsilon = epsilon  # domain-checked below
            summary.values, summary.gs, summary.deltas = [], [], []
            for k in range(length):
                if cursor >= len(lines):
                    raise fail(len(lines) + 1,
                               f"unexpected end of input inside block "
                               f"({k} of {length} tuples read)")
                parts = lines[cursor].split()
                lineno = cursor + 1
                if len(parts) != 3:
                    raise fail(lineno,
                               f"expected 'value g delta', got {lines[cursor]!r}")
                try:
                    v = float(parts[0])
                    g = int(parts[1])
                    d = int(parts[2])
                except ValueError:
                    raise fail(lineno,
                               f"unparseable tuple {lines[cursor]!r}") from None
                if not math.isfinite(v):
                    raise SummaryInvariantError(
                        f"line {lineno}: non-finite stored value {parts[0]}"
                    )
                summary.values.append(v)
                summary.gs.append(g)
                summary.deltas.append(d)
                cursor += 1
            summary.count = sum(summary.gs)
            return summary, lineno

        if not 0.0 < epsilon < 0.5:
            raise SummaryInvariantError(
                f"line 1: epsilon={epsilon!r} outside (0, 0.5)"
            )

        s1, _ = read_block(("S1",))
        subs: List[QuantileSummary] = []
        for i in range(1, big_l + 1):
            sub, _ = read_block(("SUB", str(i)))
            subs.append(sub)
        if cursor < len(lines) and any(ln.strip() for ln in lines[cursor:]):
            raise fail(cursor + 1, "trailing content after final block")

        out = cls(epsilon, compress_every_insert=compress_every_insert)
        out.s1 = s1
        out.subs = subs
        out.n = n
        if len(s1.values) != big_l:
            raise SummaryInvariantError(
                f"header declares L={big_l} but the S1 block holds "
                f"{len(s1.values)} tuples"
            )
        try:
            out.validate()
        except ValueError as exc:
            raise SummaryInvariantError(str(exc)) from exc
        return out

    # ------------------------------------------------------------------

    def freeze(self) -> "FrozenCopulaEvaluator":
        """Snapshot into a reusable evaluator (see module docstring)."""
        return FrozenCopulaEvaluator(self)


class _FrozenSummary:
    """Array-backed read view of one quantile summary.

    Replicates :meth:`QuantileSummary.quantile` and ``inverse_cdf`` with
    ``searchsorted`` lookups.  The quantile scan "last bracket whose r_max
    stays under the limit before the first overshoot" becomes a search on
    the running maximum of r_max, which agrees with the scan at every input.
    """

    __slots__ = ("epsilon", "count", "values", "rmax", "rmax_runmax")

    def __init__(self, summary: QuantileSummary) -> None:
        self.epsilon = summary.epsilon
        self.count = summary.count
        self.values = np.asarray(summary.values, dtype=np.float64)
        rmin = np.cumsum(np.asarray(summary.gs, dtype=np.int64))
        self.rmax = rmin + np.asarray(summary.deltas, dtype=np.int64)
        self.rmax_runmax = np.maximum.accumulate(self.rmax) if len(
            self.rmax
        ) else self.rmax

    def quantile(self, u: float) -> float:
        if self.count == 0:
            raise ValueError("quantile query on an empty summary")
        if not 0.0 < u <= 1.0:
            raise ValueError(f"u must lie in (0, 1], got {u!r}")
        n = self.count
        slack = _floor_eps_n(self.epsilon, n)
        r = ceil_rank(u, n)
        if r >= n - slack:
            return float(self.values[-1])
        first_over = int(np.searchsorted(self.rmax_runmax, r + slack, "right"))
        if first_over == 0:
            return float(self.values[0])
        return float(self.values[first_over - 1])

    def inverse_cdf(self, y: float) -> float:
        if self.count == 0:
            raise ValueError("inverse-CDF query on an empty summary")
        m = self.count
        if y >= self.values[-1]:
            return m / m
        if y < self.values[0]:
            return 0.0
        i = int(np.searchsorted(self.values, y, side="right")) - 1
        return int(self.rmax[i]) / m


class FrozenCopulaEvaluator:
    """Read-only copula evaluator snapshotted from a :class:`CopulaSummary`.

    Precomputes the left-fold prefix merges of the subsummaries once, so
    each call is a handful of binary searches instead of fresh merges.
    Values are bit-identical to :meth:`CopulaSummary.copula` on the same
    state.  For integration convenience the call domain is the closed unit
    square, with either argument at 0 returning the copula's boundary value
    0.0.  Mutating the source summary afterwards does not affect (and is
    not seen by) the snapshot.
    """

    __slots__ = ("epsilon", "n", "error_bound", "_s1_values", "_s1",
                 "_prefixes", "_counts")

    def __init__(self, summary: CopulaSummary) -> None:
        if summary.n == 0:
            raise ValueError("cannot freeze an empty copula summary")
        self.epsilon = summary.epsilon
        self.n = summary.n
        self.error_bound = 5.0 * summary.epsilon
        self._s1_values = np.asarray(summary.s1.values, dtype=np.float64)
        self._s1 = _FrozenSummary(summary.s1)
        self._prefixes: List[_FrozenSummary] = []
        self._counts: List[int] = []
        acc: Optional[QuantileSummary] = None
        for sub in summary.subs:
            # Same left fold as merge_many, snapshotted at every prefix.
            acc = sub.copy() if acc is None else merge(acc, sub)
            self._prefixes.append(_FrozenSummary(acc))
            self._counts.append(acc.count)

    def covering_index(self, u1: float) -> int:
        q = self._s1.quantile(u1)
        return int(np.searchsorted(self._s1_values, q, side="right"))

    def __call__(self, u1: float, u2: float) -> float:
        for name, u in (("u1", u1), ("u2", u2)):
            if not 0.0 <= u <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {u!r}")
        if u1 == 0.0 or u2 == 0.0:
            return 0.0
        e = self.covering_index(u1)
        slab = self._prefixes[e - 1]
        n_lower = self._counts[e - 1]
        if n_lower == 0:  # pragma: no cover - defensive, mirrors copula()
            return 0.0
        q = self._prefixes[-1].quantile(u2)
        frac = slab.inverse_cdf(q)
        return (n_lower / self.n) * frac

    def marginal_quantile(self, component: int, u: float) -> float:
        """Bit-identical counterpart of :meth:`CopulaSummary.marginal_quantile`."""
        if component == 1:
            return self._s1.quantile(u)
        if component == 2:
            return self._prefixes[-1].quantile(u)
        raise ValueError(f"component must be 1 or 2, got {component!r}")

    def marginal_cdf(self, component: int, y: float) -> float:
        """Bit-identical counterpart of :meth:`CopulaSummary.marginal_cdf`."""
        if component == 1:
            return self._s1.inverse_cdf(y)
        if component == 2:
            return self._prefixes[-1].inverse_cdf(y)
        raise ValueError(f"component must be 1 or 2, got {component!r}")

    def marginal_minimum(self, component: int) -> float:
        """Smallest stored value of the requested margin (exact)."""
        if component == 1:
            return float(self._s1.values[0])
        if component == 2:
            return float(self._prefixes[-1].values[0])
        raise ValueError(f"component must be 1 or 2, got {component!r}")
