"""Tests for phoneme alignment, correctness scores, and vowel-space metrics."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysmetrics import pronunciation as pron
from dysmetrics.corpus import builtin_profile
from dysmetrics.errors import MissingAE

PROFILE = builtin_profile("english")

# canonical and recognized phoneme sequences from a real dysarthric sample:
# 5 target consonants, 8 target vowels, 13 phonemes in total
CANONICAL = "HH IY W IH L AH L AW AH R EH L AY".split()
DECODED = "SH IY W AO L AH L AW AE N L IY AY".split()


def test_reference_alignment_scores():
    alignment = pron.align_phoneme_sequences(CANONICAL, DECODED)
    pcc, pcv, pcp = pron.phoneme_correctness(alignment, PROFILE)
    assert pcc == pytest.approx(40.00, abs=0.01)
    assert pcv == pytest.approx(62.50, abs=0.01)
    assert pcp == pytest.approx(53.85, abs=0.01)


def test_alignment_cost_is_minimal():
    alignment = pron.align_phoneme_sequences(CANONICAL, DECODED)
    assert alignment.cost == _brute_force_cost(CANONICAL, DECODED)


def _brute_force_cost(a, b):
    """Plain DP edit distance, written independently of the package code."""
    m, n = len(a), len(b)
    D = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        D[i][0] = i
    for j in range(n + 1):
        D[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = D[i - 1][j - 1] + (a[i - 1] != b[j - 1])
            D[i][j] = min(sub, D[i - 1][j] + 1, D[i][j - 1] + 1)
    return D[m][n]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from("ABCD"), min_size=1, max_size=8),
    st.lists(st.sampled_from("ABCD"), min_size=0, max_size=8),
)
def test_alignment_cost_matches_brute_force(a, b):
    alignment = pron.align_phoneme_sequences(a, b)
    assert alignment.cost == _brute_force_cost(a, b)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from("ABCD"), min_size=1, max_size=8),
    st.lists(st.sampled_from("ABCD"), min_size=0, max_size=8),
)
def test_alignment_pairs_reconstruct_inputs(a, b):
    alignment = pron.align_phoneme_sequences(a, b)
    ref = [x for x, y in alignment.pairs if x != pron.GAP]
    hyp = [y for x, y in alignment.pairs if y != pron.GAP]
    assert ref == list(a)
    assert hyp == list(b)


def test_identity_alignment_is_perfect():
    alignment = pron.align_phoneme_sequences(CANONICAL, CANONICAL)
    pcc, pcv, pcp = pron.phoneme_correctness(alignment, PROFILE)
    assert (pcc, pcv, pcp) == (100.0, 100.0, 100.0)
    assert alignment.cost == 0


def test_correctness_decreases_with_errors():
    """Injecting more deletions can only lower the overall correctness."""
    seq = CANONICAL
    scores = []
    for n_del in (0, 2, 4, 6):
        hyp = [s for i, s in enumerate(seq) if i >= n_del]
        alignment = pron.align_phoneme_sequences(seq, hyp)
        _, _, pcp = pron.phoneme_correctness(alignment, PROFILE)
        scores.append(pcp)
    assert all(a >= b for a, b in zip(scores, scores[1:]))


# --- vowel space -----------------------------------------------------------

def _cf(d):
    return pron.CornerFormants(corners=d, sources={k: "measured" for k in d})


CORNERS = {"i": (300.0, 2300.0), "a": (850.0, 1220.0), "u": (320.0, 900.0)}


def test_triangular_vsa_worked_example():
    tvsa, qvsa, fcr, vai, f2r = pron.vowel_space_metrics(_cf(CORNERS))
    assert tvsa == pytest.approx(374200.0, abs=1.0)
    assert qvsa is None
    # FCR = (F2u + F2a + F1i + F1u) / (F2i + F1a) = 2740/3150
    assert fcr == pytest.approx(0.869841, abs=1e-5)
    assert vai == pytest.approx(1.0 / fcr, rel=1e-9)
    assert f2r == pytest.approx(2300.0 / 900.0, rel=1e-9)


def test_quadrilateral_vsa():
    corners = dict(CORNERS)
    corners["ae"] = (660.0, 1700.0)
    tvsa, qvsa, fcr, vai, f2r = pron.vowel_space_metrics(_cf(corners))
    assert qvsa is not None and qvsa > tvsa * 0.5
    with pytest.raises(MissingAE):
        pron.quadrilateral_vsa(_cf(CORNERS))


def test_collinear_corners_zero_area():
    corners = {"i": (100.0, 100.0), "a": (200.0, 200.0), "u": (300.0, 300.0)}
    tvsa, _, _, _, _ = pron.vowel_space_metrics(_cf(corners))
    assert tvsa == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.tuples(*[st.floats(200.0, 900.0) for _ in range(3)]),
    st.tuples(*[st.floats(800.0, 2500.0) for _ in range(3)]),
)
def test_fcr_vai_reciprocal(f1s, f2s):
    corners = {
        "i": (f1s[0], f2s[0]),
        "a": (f1s[1], f2s[1]),
        "u": (f1s[2], f2s[2]),
    }
    _, _, fcr, vai, _ = pron.vowel_space_metrics(_cf(corners))
    assert fcr * vai == pytest.approx(1.0, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.permutations(["i", "a", "u"]))
def test_tvsa_vertex_order_invariant(order):
    """Shoelace area must not depend on which corner is listed first."""
    base = pron.vowel_space_metrics(_cf(CORNERS))[0]
    rotated = {k: CORNERS[k] for k in order}
    assert pron.vowel_space_metrics(_cf(rotated))[0] == pytest.approx(base, rel=1e-9)
