"""Screen ingestion, octile labelling, fold assignment and planted synthetic data."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence as Seq

import numpy as np

from .errors import BadK, InputError, MissingColumn, TooFewRecords
from .seqcore import (
    ALPHABET,
    SEQ_LEN,
    MismatchProfile,
    Role,
    Sequence,
    mismatch_profile,
    parse_sequence,
    reverse_complement,
)

DEFAULT_SCHEMA = {"guide": "guide", "target": "target", "efficacy": "efficacy", "gene": "gene"}
GENES = ("CD46", "CD55", "CD71")


@dataclass(frozen=True)
class GuideRecord:
    guide: Sequence
    target: Sequence
    efficacy: float
    gene: str = "NA"
    profile: MismatchProfile = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.efficacy):
            raise InputError(f"efficacy must be finite, got {self.efficacy}")
        object.__setattr__(self, "profile", mismatch_profile(self.guide, self.target))

    @property
    def is_perfect_match(self) -> bool:
        return self.profile.is_perfect


@dataclass(frozen=True)
class LabeledRecord:
    record: GuideRecord
    class_id: int
    n_classes: int = 8

    @property
    def is_positive(self) -> bool:
        return self.class_id == self.n_classes - 1


@dataclass
class IngestStats:
    n_rows: int = 0
    n_records: int = 0
    n_rejected: int = 0
    n_perfect: int = 0
    n_mismatch: int = 0
    t_normalized: int = 0
    per_gene: dict[str, int] = field(default_factory=dict)
    rejects: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rejects"] = [{"row": r, "error": e} for r, e in self.rejects]
        return d

    def summary(self) -> str:
        lines = [
            f"rows read        {self.n_rows}",
            f"records kept     {self.n_records}",
            f"rows rejected    {self.n_rejected}",
            f"perfect matches  {self.n_perfect}",
            f"mismatch guides  {self.n_mismatch}",
            f"T->U normalized  {self.t_normalized}",
        ]
        lines += [f"gene {g:<11} {n}" for g, n in sorted(self.per_gene.items())]
        lines += [f"  row {r}: {e}" for r, e in self.rejects[:20]]
        if len(self.rejects) > 20:
            lines.append(f"  ... {len(self.rejects) - 20} more rejects")
        return "\n".join(lines)


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def load_records(
    source: str | Path | IO[str],
    schema: Mapping[str, str] | None = None,
    strict: bool = False,
    length: int = SEQ_LEN,
) -> tuple[list[GuideRecord], IngestStats]:
    """Read a comma- or tab-separated screen table.

    Invalid rows are skipped and listed in the returned stats; with
    ``strict=True`` the first invalid row raises :class:`InputError` naming
    its line number (the header is line 1).
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return load_records(fh, schema, strict, length)

    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    text = source.read()
    header = text.split("\n", 1)[0]
    reader = csv.DictReader(io.StringIO(text), delimiter=_sniff_delimiter(header))
    fields = [f.strip() for f in reader.fieldnames or []]
    reader.fieldnames = fields
    for key in ("guide", "target", "efficacy"):
        if schema[key] not in fields:
            raise MissingColumn(schema[key])
    has_gene = schema["gene"] in fields

    stats = IngestStats()
    records: list[GuideRecord] = []
    genes: Counter[str] = Counter()
    for line_no, row in enumerate(reader, start=2):
        stats.n_rows += 1
        try:
            g_txt, t_txt = row[schema["guide"]] or "", row[schema["target"]] or ""
            guide = parse_sequence(g_txt, Role.GUIDE, length)
            target = parse_sequence(t_txt, Role.TARGET, length)
            try:
                eff = float(row[schema["efficacy"]])
            except (TypeError, ValueError):
                raise InputError(f"efficacy {row[schema['efficacy']]!r} is not a number")
            gene = (row[schema["gene"]] or "NA").strip() if has_gene else "NA"
            rec = GuideRecord(guide, target, eff, gene)
        except InputError as exc:
            if strict:
                raise InputError(f"line {line_no}: {exc}") from exc
            stats.n_rejected += 1
            stats.rejects.append((line_no, str(exc)))
            continue
        stats.t_normalized += g_txt.upper().count("T") + t_txt.upper().count("T")
        records.append(rec)
        genes[rec.gene] += 1
        if rec.is_perfect_match:
            stats.n_perfect += 1
    stats.n_records = len(records)
    stats.n_mismatch = stats.n_records - stats.n_perfect
    stats.per_gene = dict(sorted(genes.items()))
    return records, stats


def write_records(
    records: Iterable[GuideRecord | LabeledRecord], fh: IO[str]
) -> None:
    """Write records in the ingestion format (tab-separated).

    Labeled records gain a trailing ``class_id`` column.
    """
    records = list(records)
    labeled = bool(records) and isinstance(records[0], LabeledRecord)
    cols = ["guide", "target", "efficacy", "gene"] + (["class_id"] if labeled else [])
    fh.write("\t".join(cols) + "\n")
    for item in records:
        rec = item.record if labeled else item
        row = [rec.guide.bases, rec.target.bases, repr(float(rec.efficacy)), rec.gene]
        if labeled:
            row.append(str(item.class_id))
        fh.write("\t".join(row) + "\n")


def split_sizes(n: int, k: int) -> list[int]:
    """Sizes of ``k`` near-equal contiguous groups of ``n`` items, larger groups first."""
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def _bin_group(effs: np.ndarray, n_classes: int) -> tuple[np.ndarray, list[float]]:
    # stable sort: equal efficacies keep input order, so earlier rows land lower
    order = np.argsort(effs, kind="stable")
    classes = np.empty(len(effs), dtype=int)
    bounds = []
    start = 0
    for c, size in enumerate(split_sizes(len(effs), n_classes)):
        classes[order[start:start + size]] = c
        if c > 0:
            bounds.append(float(effs[order[start]]))
        start += size
    return classes, bounds


def assign_classes(
    records: Seq[GuideRecord],
    n_classes: int = 8,
    invert: bool = False,
    per_gene: bool = False,
) -> tuple[list[LabeledRecord], dict[str, list[float]]]:
    """Label records by equal-count efficacy quantile.

    The top group gets ``n_classes - 1`` and is the positive class. Returns the
    labelled records (input order) and, per binning group, the lower efficacy
    edge of classes ``1..n_classes-1``. With ``invert`` lower efficacy ranks
    higher. Pooled binning uses the group key ``"all"``.
    """
    if n_classes < 2:
        raise TooFewRecords(f"n_classes must be >= 2, got {n_classes}")
    if not records:
        raise TooFewRecords("no records to label")
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        groups.setdefault(r.gene if per_gene else "all", []).append(i)
    classes = np.empty(len(records), dtype=int)
    boundaries: dict[str, list[float]] = {}
    sign = -1.0 if invert else 1.0
    for key, idx in sorted(groups.items()):
        if len(idx) < n_classes:
            raise TooFewRecords(
                f"group {key!r} has {len(idx)} records, need at least {n_classes}"
            )
        effs = np.array([sign * records[i].efficacy for i in idx])
        cls, bounds = _bin_group(effs, n_classes)
        classes[idx] = cls
        boundaries[key] = [sign * b for b in bounds]
    labeled = [LabeledRecord(r, int(c), n_classes) for r, c in zip(records, classes)]
    return labeled, boundaries


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: tuple[int, ...]
    seed: int

    def test_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f != fold]

    @property
    def sizes(self) -> list[int]:
        counts = Counter(self.fold_of)
        return [counts[f] for f in range(self.k)]


def kfold_split(n_records: int, k: int, seed: int) -> FoldAssignment:
    """Seeded permutation followed by round-robin fold assignment."""
    if k < 2:
        raise BadK(f"k must be >= 2, got {k}")
    if n_records < k:
        raise BadK(f"cannot split {n_records} records into {k} folds")
    perm = np.random.default_rng(seed).permutation(n_records)
    fold_of = np.empty(n_records, dtype=int)
    fold_of[perm] = np.arange(n_records) % k
    return FoldAssignment(k, tuple(int(f) for f in fold_of), seed)


def _bump(center: float, width: float, length: int = SEQ_LEN) -> np.ndarray:
    p = np.arange(1, length + 1)
    return np.exp(-0.5 * ((p - center) / width) ** 2)


def default_position_effect(length: int = SEQ_LEN) -> tuple[float, ...]:
    """Planted mismatch penalty per position: strongest at 18, secondary peak at 5."""
    eff = 0.1 + 1.0 * _bump(18, 1.2, length) + 0.7 * _bump(5, 1.2, length)
    return tuple(float(round(e, 6)) for e in eff)


DEFAULT_BASE_EFFECT = {"A": 1.0, "C": 1.5, "G": 1.5, "U": 0.5}


@dataclass(frozen=True)
class SyntheticConfig:
    n_targets: int = 200
    guides_per_target: int = 10
    position_effect: tuple[float, ...] = field(default_factory=default_position_effect)
    base_effect: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BASE_EFFECT))
    noise_sd: float = 0.05
    seed: int = 0
    base_level: float = 1.0
    # probabilities of 1, 2 and 3 substitutions in a mutated guide
    mismatch_counts: tuple[float, float, float] = (0.4, 0.3, 0.3)
    consecutive_fraction: float = 0.5
    # add every single-position substitution for each target (mismatch tiling)
    tile_singles: bool = False
    genes: tuple[str, ...] = GENES

    def __post_init__(self):
        if len(self.position_effect) < 3:
            raise InputError("position_effect needs at least 3 positions")
        if self.noise_sd < 0:
            raise InputError("noise_sd must be non-negative")
        if self.n_targets < 1 or self.guides_per_target < 0:
            raise InputError("n_targets must be >= 1 and guides_per_target >= 0")
        if set(self.base_effect) != set(ALPHABET):
            raise InputError("base_effect must cover A, C, G, U")
        p = np.asarray(self.mismatch_counts, dtype=float)
        if p.shape != (3,) or (p < 0).any() or p.sum() <= 0:
            raise InputError("mismatch_counts must be three non-negative weights")

    @property
    def length(self) -> int:
        return len(self.position_effect)


def planted_efficacy(profile: MismatchProfile, cfg: SyntheticConfig) -> float:
    """Noise-free efficacy of a guide under the planted model."""
    penalty = sum(
        cfg.position_effect[p - 1] * cfg.base_effect[b]
        for p, b in zip(profile.positions, profile.originals)
    )
    return cfg.base_level - penalty


def _mutation_positions(rng: np.random.Generator, cfg: SyntheticConfig) -> list[int]:
    L = cfg.length
    probs = np.asarray(cfg.mismatch_counts, dtype=float)
    k = int(rng.choice([1, 2, 3], p=probs / probs.sum()))
    if k > 1 and rng.random() < cfg.consecutive_fraction:
        start = int(rng.integers(0, L - k + 1))
        return list(range(start, start + k))
    return sorted(int(p) for p in rng.choice(L, size=k, replace=False))


def _substitute(rng: np.random.Generator, bases: list[str], positions: Iterable[int]) -> str:
    out = list(bases)
    for p in positions:
        choices = [b for b in ALPHABET if b != bases[p]]
        out[p] = choices[int(rng.integers(0, 3))]
    return "".join(out)


def generate_synthetic(cfg: SyntheticConfig) -> list[GuideRecord]:
    """Planted mismatch screen.

    Every target contributes its perfect-match guide followed by
    ``guides_per_target`` mutated guides with 1-3 substitutions (and, with
    ``tile_singles``, one substitution at every position). Base composition at
    each position is balanced across targets, exactly when ``n_targets`` is a
    multiple of four.
    """
    rng = np.random.default_rng(cfg.seed)
    L = cfg.length
    # aligned-frame bases of each target's perfect guide, balanced per column
    cols = [rng.permutation(np.resize(np.array(list(ALPHABET)), cfg.n_targets)) for _ in range(L)]
    records: list[GuideRecord] = []
    for t in range(cfg.n_targets):
        perfect = [str(cols[p][t]) for p in range(L)]
        gene = cfg.genes[t % len(cfg.genes)]
        target = reverse_complement(Sequence("".join(perfect), Role.TARGET))
        variants = ["".join(perfect)]
        if cfg.tile_singles:
            variants += [_substitute(rng, perfect, [p]) for p in range(L)]
        variants += [
            _substitute(rng, perfect, _mutation_positions(rng, cfg))
            for _ in range(cfg.guides_per_target)
        ]
        for g in variants:
            rec_guide = Sequence(g, Role.GUIDE)
            profile = mismatch_profile(rec_guide, target)
            eff = planted_efficacy(profile, cfg)
            if cfg.noise_sd > 0:
                eff += float(rng.normal(0.0, cfg.noise_sd))
            records.append(GuideRecord(rec_guide, target, float(eff), gene))
    return records
