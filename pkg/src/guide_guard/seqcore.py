"""RNA sequence handling and the weighted one-hot pair encoding.

Conventions used throughout the package:

* Bases are stored as upper-case strings over ``ACGU``; ``T`` is read as ``U``.
* Positions in anything user-facing are 1-indexed.
* A target is compared to its guide through the target's reverse complement,
  so "mismatch at position i" means ``guide[i] != revcomp(target)[i]``.
* The encoded matrix is position-major with channel order A, C, G, U.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import ConfigError, InvalidSymbol, LengthMismatch, WrongLength

SEQ_LEN = 23
ALPHABET = "ACGU"
CHANNEL = {b: i for i, b in enumerate(ALPHABET)}
_COMPLEMENT = str.maketrans("ACGU", "UGCA")
_NORMALIZE = {"A": "A", "C": "C", "G": "G", "U": "U", "T": "U"}

# Default positional emphasis (1-indexed position -> multiplier).
POSITION_EMPHASIS = {18: 1.5, 5: 1.25}

BASE_PRESETS: dict[str, dict[str, float]] = {
    "none": {"A": 1.0, "C": 1.0, "G": 1.0, "U": 1.0},
    "u-boost": {"A": 1.0, "C": 1.0, "G": 1.0, "U": 1.2},
    "gc-boost": {"A": 1.0, "C": 1.2, "G": 1.2, "U": 1.0},
}


class Nucleotide(str, Enum):
    A = "A"
    C = "C"
    G = "G"
    U = "U"


class Role(str, Enum):
    GUIDE = "guide"
    TARGET = "target"


class Mode(str, Enum):
    ZIP = "zip"
    CONCAT = "concat"


@dataclass(frozen=True)
class Sequence:
    bases: str
    role: Role = Role.GUIDE

    def __len__(self) -> int:
        return len(self.bases)

    def __str__(self) -> str:
        return self.bases

    def __getitem__(self, i):
        return self.bases[i]

    @property
    def nucleotides(self) -> list[Nucleotide]:
        return [Nucleotide(b) for b in self.bases]


@dataclass(frozen=True)
class MismatchProfile:
    """Mismatches between a guide and its reverse-complement-aligned target.

    ``originals`` holds the aligned target-frame base at each mismatch (the
    base a perfectly matching guide would carry); ``substitutes`` holds the
    guide's base there.
    """

    positions: tuple[int, ...]
    originals: tuple[str, ...]
    substitutes: tuple[str, ...]

    @property
    def is_perfect(self) -> bool:
        return not self.positions

    def __len__(self) -> int:
        return len(self.positions)


def parse_sequence(
    text: str, role: Role = Role.GUIDE, length: int | None = None
) -> Sequence:
    """Validate and normalise ``text`` into a :class:`Sequence`.

    Lower case is accepted and ``T`` becomes ``U``. When ``length`` is given
    the sequence must have exactly that many bases.
    """
    text = text.strip()
    if not text:
        raise WrongLength(length or 1, 0)
    out = []
    for i, ch in enumerate(text.upper(), start=1):
        b = _NORMALIZE.get(ch)
        if b is None:
            raise InvalidSymbol(i, text[i - 1])
        out.append(b)
    if length is not None and len(out) != length:
        raise WrongLength(length, len(out))
    return Sequence("".join(out), Role(role))


def reverse_complement(seq: Sequence) -> Sequence:
    return Sequence(seq.bases.translate(_COMPLEMENT)[::-1], seq.role)


def compare_aligned(guide: str, aligned: str) -> MismatchProfile:
    """Profile two strings already in the same frame."""
    if len(guide) != len(aligned):
        raise LengthMismatch(len(guide), len(aligned))
    hits = [(i, a, g) for i, (g, a) in enumerate(zip(guide, aligned), start=1) if g != a]
    return MismatchProfile(
        tuple(h[0] for h in hits), tuple(h[1] for h in hits), tuple(h[2] for h in hits)
    )


def mismatch_profile(guide: Sequence, target: Sequence) -> MismatchProfile:
    if len(guide) != len(target):
        raise LengthMismatch(len(guide), len(target))
    return compare_aligned(guide.bases, reverse_complement(target).bases)


@dataclass(frozen=True)
class EncodingWeights:
    position_weights: tuple[float, ...] = field(
        default_factory=lambda: default_position_weights()
    )
    base_weights: Mapping[str, float] = field(
        default_factory=lambda: dict(BASE_PRESETS["u-boost"])
    )
    mode: Mode = Mode.ZIP

    def __post_init__(self):
        pw = tuple(float(w) for w in self.position_weights)
        object.__setattr__(self, "position_weights", pw)
        object.__setattr__(self, "mode", Mode(self.mode))
        bw = {}
        for b, w in self.base_weights.items():
            key = _NORMALIZE.get(str(b).upper())
            if key is None:
                raise ConfigError(f"unknown base {b!r} in base_weights")
            bw[key] = float(w)
        if set(bw) != set(ALPHABET):
            raise ConfigError("base_weights must cover exactly A, C, G, U")
        object.__setattr__(self, "base_weights", {b: bw[b] for b in ALPHABET})
        for w in (*pw, *bw.values()):
            if not (np.isfinite(w) and w > 0):
                raise ConfigError(f"encoding weights must be positive and finite, got {w}")

    @classmethod
    def preset(
        cls,
        bases: str = "u-boost",
        positions: str = "default",
        mode: Mode | str = Mode.ZIP,
        length: int = SEQ_LEN,
    ) -> EncodingWeights:
        if bases not in BASE_PRESETS:
            raise ConfigError(f"unknown base-weight preset {bases!r}")
        if positions == "default":
            pw = default_position_weights(length)
        elif positions == "flat":
            pw = (1.0,) * length
        else:
            raise ConfigError(f"unknown position-weight preset {positions!r}")
        return cls(pw, dict(BASE_PRESETS[bases]), Mode(mode))

    @property
    def length(self) -> int:
        return len(self.position_weights)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "position_weights": list(self.position_weights),
            "base_weights": dict(self.base_weights),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> EncodingWeights:
        return cls(tuple(d["position_weights"]), dict(d["base_weights"]), Mode(d["mode"]))

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def default_position_weights(length: int = SEQ_LEN) -> tuple[float, ...]:
    return tuple(POSITION_EMPHASIS.get(p, 1.0) for p in range(1, length + 1))


def row_order(mode: Mode, length: int = SEQ_LEN) -> np.ndarray:
    """Row index in the encoded matrix for (guide pos 0..L-1, target pos 0..L-1).

    The returned array ``r`` has shape (2L,): ``r[:L]`` are guide rows and
    ``r[L:]`` target rows. Concatenate mode is the identity.
    """
    idx = np.arange(length)
    if Mode(mode) is Mode.ZIP:
        return np.concatenate([2 * idx, 2 * idx + 1])
    return np.concatenate([idx, length + idx])


def encode_pair(guide: Sequence, target: Sequence, weights: EncodingWeights) -> np.ndarray:
    """Encode a guide/target pair as a (2L, 4) weighted one-hot matrix."""
    L = weights.length
    if len(guide) != len(target):
        raise LengthMismatch(len(guide), len(target))
    if len(guide) != L:
        raise WrongLength(L, len(guide))
    rc = reverse_complement(target).bases
    bases = guide.bases + rc
    pw = np.asarray(weights.position_weights)
    scale = np.concatenate([pw, pw]) * np.array([weights.base_weights[b] for b in bases])
    out = np.zeros((2 * L, 4))
    out[row_order(weights.mode, L), [CHANNEL[b] for b in bases]] = scale
    return out


def encode_pairs(
    pairs: Iterable[tuple[Sequence, Sequence]], weights: EncodingWeights
) -> np.ndarray:
    """Stack :func:`encode_pair` over many pairs into an (N, 2L, 4) array."""
    mats = [encode_pair(g, t, weights) for g, t in pairs]
    if not mats:
        return np.zeros((0, 2 * weights.length, 4))
    return np.stack(mats)
