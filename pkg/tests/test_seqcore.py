import numpy as np
import pytest
from hypothesis import given, strategies as st

from guide_guard.errors import ConfigError, InvalidSymbol, LengthMismatch, WrongLength
from guide_guard.seqcore import (
    EncodingWeights,
    Mode,
    Role,
    Sequence,
    compare_aligned,
    encode_pair,
    mismatch_profile,
    parse_sequence,
    reverse_complement,
    row_order,
)

rna = st.text(alphabet="ACGU", min_size=1, max_size=40)
rna23 = st.text(alphabet="ACGU", min_size=23, max_size=23)


def test_parse_identity():
    assert parse_sequence("ACGU").bases == "ACGU"


def test_parse_case_and_t():
    s = parse_sequence("acgt", Role.TARGET)
    assert s.bases == "ACGU" and s.role is Role.TARGET


def test_parse_invalid_symbol_is_one_indexed():
    with pytest.raises(InvalidSymbol) as e:
        parse_sequence("ACXU")
    assert (e.value.position, e.value.char) == (3, "X")


def test_parse_strict_length():
    with pytest.raises(WrongLength):
        parse_sequence("ACGU", length=23)
    assert len(parse_sequence("A" * 23, length=23)) == 23


@pytest.mark.parametrize("src,expected", [("AUGC", "GCAU"), ("AAAA", "UUUU")])
def test_reverse_complement_examples(src, expected):
    assert reverse_complement(Sequence(src)).bases == expected


@given(rna)
def test_reverse_complement_involution(s):
    seq = Sequence(s)
    twice = reverse_complement(reverse_complement(seq))
    assert twice == seq and len(reverse_complement(seq)) == len(seq)


def test_compare_aligned_examples():
    assert compare_aligned("AAAA", "AAAA").positions == ()
    p = compare_aligned("AAAA", "AAUA")
    assert p.positions == (3,) and p.originals == ("U",) and p.substitutes == ("A",)
    assert compare_aligned("AAAA", "UUAA").positions == (1, 2)


def test_mismatch_profile_uses_reverse_complement():
    guide = Sequence("ACGUA")
    target = reverse_complement(guide)
    assert mismatch_profile(guide, target).is_perfect
    with pytest.raises(LengthMismatch):
        mismatch_profile(guide, Sequence("ACG"))


@given(rna23, rna23)
def test_profile_size_is_hamming_distance(g, a):
    p = compare_aligned(g, a)
    assert len(p) == sum(x != y for x, y in zip(g, a))
    assert list(p.positions) == sorted(set(p.positions))
    assert all(1 <= q <= 23 for q in p.positions)


FLAT = EncodingWeights.preset("none", "flat")


def test_encode_unit_one_hot():
    g = Sequence("A" * 23)
    t = reverse_complement(g)
    m = encode_pair(g, t, FLAT)
    assert m.shape == (46, 4)
    np.testing.assert_array_equal(m, np.tile([1.0, 0, 0, 0], (46, 1)))


def test_encode_position_18_weight():
    w = EncodingWeights.preset("none", "default")
    g = Sequence("A" * 23)
    m = encode_pair(g, reverse_complement(g), w)
    # zip layout: guide position 18 is row 2*18-1 (1-indexed) = 34 (0-indexed)
    np.testing.assert_array_equal(m[34], [1.5, 0, 0, 0])
    np.testing.assert_array_equal(m[35], [1.5, 0, 0, 0])
    np.testing.assert_array_equal(m[8], [1.25, 0, 0, 0])


def test_base_weight_applies_per_base():
    w = EncodingWeights.preset("u-boost", "flat")
    g = Sequence("U" * 23)
    m = encode_pair(g, reverse_complement(g), w)
    assert m.max() == pytest.approx(1.2)


@given(rna23, rna23)
def test_zip_concat_same_rows(gs, ts):
    g, t = Sequence(gs), Sequence(ts, Role.TARGET)
    z = encode_pair(g, t, EncodingWeights.preset("u-boost", "default", Mode.ZIP))
    c = encode_pair(g, t, EncodingWeights.preset("u-boost", "default", Mode.CONCAT))
    # fixed permutation: zip row r_zip[k] holds concat row k
    np.testing.assert_array_equal(z[row_order(Mode.ZIP)], c[row_order(Mode.CONCAT)])
    assert sorted(map(tuple, z)) == sorted(map(tuple, c))


@given(rna23, rna23)
def test_row_sparsity(gs, ts):
    m = encode_pair(Sequence(gs), Sequence(ts), EncodingWeights())
    assert ((m != 0).sum(axis=1) == 1).all()
    assert (m >= 0).all()


@given(rna23, rna23, st.integers(0, 22), st.floats(0.1, 5.0))
def test_weight_linearity(gs, ts, k, c):
    base = EncodingWeights.preset("gc-boost", "default")
    pw = list(base.position_weights)
    pw[k] *= c
    scaled = EncodingWeights(tuple(pw), base.base_weights, base.mode)
    g, t = Sequence(gs), Sequence(ts)
    a, b = encode_pair(g, t, base), encode_pair(g, t, scaled)
    rows = [2 * k, 2 * k + 1]
    np.testing.assert_allclose(b[rows], c * a[rows], rtol=1e-12)
    others = np.setdiff1d(np.arange(46), rows)
    np.testing.assert_array_equal(b[others], a[others])


def test_zip_interleaves_guide_first():
    g = Sequence("A" * 23)
    t = Sequence("A" * 23)  # reverse complement is all U
    m = encode_pair(g, t, FLAT)
    assert m[0].argmax() == 0 and m[1].argmax() == 3
    c = encode_pair(g, t, EncodingWeights.preset("none", "flat", Mode.CONCAT))
    assert (c[:23].argmax(1) == 0).all() and (c[23:].argmax(1) == 3).all()


def test_invalid_weights_rejected():
    with pytest.raises(ConfigError):
        EncodingWeights((1.0,) * 22 + (0.0,))
    with pytest.raises(ConfigError):
        EncodingWeights(base_weights={"A": 1, "C": 1, "G": 1})
    with pytest.raises(ConfigError):
        EncodingWeights.preset("bogus")


def test_fingerprint_stable_and_sensitive():
    a = EncodingWeights.preset("u-boost")
    assert a.fingerprint() == EncodingWeights.preset("u-boost").fingerprint()
    assert a.fingerprint() != EncodingWeights.preset("gc-boost").fingerprint()
    assert EncodingWeights.from_dict(a.to_dict()) == a
