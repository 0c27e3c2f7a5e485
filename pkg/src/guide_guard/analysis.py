"""Efficacy statistics grouped by mismatch position and replaced base.

Every query selects records by the shape of their mismatch profile (one
mismatch, a consecutive run, any two positions) and aggregates efficacy per
position. Bins with no records carry ``mean=None`` rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence as Seq

import numpy as np

from .dataset import GuideRecord, LabeledRecord
from .errors import BadRunLength, InputError
from .seqcore import ALPHABET, SEQ_LEN, MismatchProfile

AGGREGATORS: dict[str, Callable[[np.ndarray], float]] = {
    "mean": lambda v: float(np.mean(v)),
    "median": lambda v: float(np.median(v)),
}


@dataclass(frozen=True)
class Bin:
    position: int
    mean: float | None
    count: int

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass
class PositionHistogram:
    bins: list[Bin]
    filter: dict
    n_matched: int
    n_ignored: int

    @property
    def positions(self) -> np.ndarray:
        return np.array([b.position for b in self.bins])

    @property
    def means(self) -> np.ndarray:
        return np.array([np.nan if b.mean is None else b.mean for b in self.bins])

    @property
    def counts(self) -> np.ndarray:
        return np.array([b.count for b in self.bins])

    def to_tsv(self) -> str:
        lines = ["position\tmean\tcount\tempty"]
        for b in self.bins:
            m = "" if b.mean is None else repr(b.mean)
            lines.append(f"{b.position}\t{m}\t{b.count}\t{int(b.empty)}")
        return "\n".join(lines) + "\n"


@dataclass
class PairHeatmap:
    """Upper-triangular (i < j) grid; ``mean``/``count`` are indexed by 1-based position."""

    length: int
    mean: np.ndarray = field(repr=False)
    count: np.ndarray = field(repr=False)
    n_matched: int = 0
    n_ignored: int = 0

    def cells(self) -> Iterable[tuple[int, int, float | None, int]]:
        for i in range(1, self.length + 1):
            for j in range(i + 1, self.length + 1):
                c = int(self.count[i, j])
                yield i, j, (float(self.mean[i, j]) if c else None), c

    def argmin(self) -> tuple[int, int]:
        best = min((m, i, j) for i, j, m, c in self.cells() if c)
        return best[1], best[2]

    def to_tsv(self) -> str:
        lines = ["i\tj\tmean\tcount"]
        for i, j, m, c in self.cells():
            lines.append(f"{i}\t{j}\t{'' if m is None else repr(m)}\t{c}")
        return "\n".join(lines) + "\n"


def _unwrap(records: Iterable[GuideRecord | LabeledRecord]) -> list[GuideRecord]:
    return [r.record if isinstance(r, LabeledRecord) else r for r in records]


def _length(records: Seq[GuideRecord], length: int | None) -> int:
    if length is not None:
        return length
    return len(records[0].guide) if records else SEQ_LEN


def _histogram(
    records: Seq[GuideRecord],
    select: Callable[[MismatchProfile], int | None],
    n_bins: int,
    descriptor: dict,
    aggregator: str,
) -> PositionHistogram:
    if aggregator not in AGGREGATORS:
        raise InputError(f"unknown aggregator {aggregator!r}")
    groups: dict[int, list[float]] = {p: [] for p in range(1, n_bins + 1)}
    matched = 0
    for r in records:
        p = select(r.profile)
        if p is None:
            continue
        groups[p].append(r.efficacy)
        matched += 1
    agg = AGGREGATORS[aggregator]
    bins = [Bin(p, agg(np.asarray(v)) if v else None, len(v)) for p, v in groups.items()]
    return PositionHistogram(bins, {**descriptor, "aggregator": aggregator}, matched, len(records) - matched)


def single_mismatch_histogram(records, aggregator: str = "mean", length: int | None = None) -> PositionHistogram:
    """Efficacy by position over records with exactly one mismatch."""
    records = _unwrap(records)
    L = _length(records, length)
    return _histogram(
        records,
        lambda pr: pr.positions[0] if len(pr) == 1 else None,
        L,
        {"analysis": "single", "run_length": 1},
        aggregator,
    )


def consecutive_mismatch_histogram(
    records, run_length: int, aggregator: str = "mean", length: int | None = None
) -> PositionHistogram:
    """Records whose mismatches form exactly one run of ``run_length`` adjacent
    positions, binned by the first position of the run."""
    if run_length not in (2, 3):
        raise BadRunLength(f"run_length must be 2 or 3, got {run_length}")
    records = _unwrap(records)
    L = _length(records, length)

    def select(pr: MismatchProfile):
        pos = pr.positions
        if len(pos) == run_length and pos[-1] - pos[0] == run_length - 1:
            return pos[0]
        return None

    name = {2: "double_consecutive", 3: "triple_consecutive"}[run_length]
    return _histogram(records, select, L - run_length + 1,
                      {"analysis": name, "run_length": run_length}, aggregator)


def per_nucleotide_histogram(
    records, original_base: str, side: str = "target", aggregator: str = "mean",
    length: int | None = None,
) -> PositionHistogram:
    """Single-mismatch histogram restricted to one replaced base.

    ``side="target"`` filters on the target-frame base the guide failed to
    match; ``side="guide"`` filters on the base the guide carries instead.
    """
    base = original_base.upper().replace("T", "U")
    if base not in ALPHABET:
        raise InputError(f"invalid base {original_base!r}")
    if side not in ("target", "guide"):
        raise InputError(f"side must be 'target' or 'guide', got {side!r}")
    records = _unwrap(records)
    L = _length(records, length)

    def select(pr: MismatchProfile):
        if len(pr) != 1:
            return None
        b = pr.originals[0] if side == "target" else pr.substitutes[0]
        return pr.positions[0] if b == base else None

    return _histogram(records, select, L,
                      {"analysis": f"single_{base}", "base": base, "side": side}, aggregator)


def pairwise_mismatch_heatmap(records, aggregator: str = "mean", length: int | None = None) -> PairHeatmap:
    """Efficacy for records with exactly two mismatches, at cell (i, j) with i < j."""
    if aggregator not in AGGREGATORS:
        raise InputError(f"unknown aggregator {aggregator!r}")
    records = _unwrap(records)
    L = _length(records, length)
    groups: dict[tuple[int, int], list[float]] = {}
    for r in records:
        if len(r.profile) == 2:
            groups.setdefault(tuple(r.profile.positions), []).append(r.efficacy)
    mean = np.full((L + 1, L + 1), np.nan)
    count = np.zeros((L + 1, L + 1), dtype=int)
    agg = AGGREGATORS[aggregator]
    for (i, j), v in groups.items():
        mean[i, j] = agg(np.asarray(v))
        count[i, j] = len(v)
    matched = int(count.sum())
    return PairHeatmap(L, mean, count, matched, len(records) - matched)


def run_all(records, aggregator: str = "mean", side: str = "target") -> dict:
    """All position analyses keyed by export name."""
    records = _unwrap(records)
    out: dict = {
        "single": single_mismatch_histogram(records, aggregator),
        "double_consecutive": consecutive_mismatch_histogram(records, 2, aggregator),
        "triple_consecutive": consecutive_mismatch_histogram(records, 3, aggregator),
        "pairwise": pairwise_mismatch_heatmap(records, aggregator),
    }
    for b in ALPHABET:
        out[f"single_{b}"] = per_nucleotide_histogram(records, b, side, aggregator)
    return out


def long_format(results: dict) -> str:
    """One row per non-empty bin across analyses, for external plotting."""
    lines = ["analysis\ti\tj\tmean\tcount"]
    for name, res in results.items():
        if isinstance(res, PairHeatmap):
            for i, j, m, c in res.cells():
                if c:
                    lines.append(f"{name}\t{i}\t{j}\t{m!r}\t{c}")
        else:
            for b in res.bins:
                if not b.empty:
                    lines.append(f"{name}\t{b.position}\t\t{b.mean!r}\t{b.count}")
    return "\n".join(lines) + "\n"
