"""Tests for speech-rate counts, pitch/energy statistics, and rhythm metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysmetrics import prosody
from dysmetrics.corpus import AnnotationTier, Interval, builtin_profile
from dysmetrics.errors import TooFewIntervals

PROFILE = builtin_profile("english")


def _tier(entries):
    return AnnotationTier(
        intervals=tuple(Interval(s, e, l) for s, e, l in entries)
    )


def test_speech_rate_worked_example():
    # 12 nuclei over 4 s total with 1 s of pauses -> 3.0 / 4.0 syll/s
    entries = []
    t = 0.0
    for k in range(12):
        entries.append((t, t + 0.1, "T"))
        entries.append((t + 0.1, t + 0.25, "AA"))
        t += 0.25
    entries.append((t, t + 1.0, "sil"))  # 3.0 .. 4.0
    tier = _tier(entries)
    spans = [(0.0, 3.0, False), (3.0, 4.0, True)]
    sr, ar, n_pauses, pause_dur, phone_ratio = prosody.speech_rate_features(
        tier, spans, PROFILE
    )
    assert sr == pytest.approx(3.0)
    assert ar == pytest.approx(4.0)
    assert n_pauses == 1
    assert pause_dur == pytest.approx(1.0)
    assert phone_ratio == pytest.approx(0.75)


def test_pause_threshold():
    # 0.09 s of silence is not a pause; 0.2 s is
    tier = _tier([(0.0, 0.3, "AA"), (0.3, 0.39, "sil"), (0.39, 0.69, "AA")])
    spans = [(0.0, 0.3, False), (0.3, 0.39, True), (0.39, 0.69, False)]
    _, _, n, dur, _ = prosody.speech_rate_features(tier, spans, PROFILE)
    assert n == 0 and dur == 0.0
    tier2 = _tier([(0.0, 0.3, "AA"), (0.3, 0.5, "sil"), (0.5, 0.8, "AA")])
    spans2 = [(0.0, 0.3, False), (0.3, 0.5, True), (0.5, 0.8, False)]
    _, _, n2, dur2, _ = prosody.speech_rate_features(tier2, spans2, PROFILE)
    assert n2 == 1 and dur2 == pytest.approx(0.2)


def test_five_stats_two_values():
    from dysmetrics.signal import PitchContour

    contour = PitchContour(
        times=np.array([0.0, 0.01]),
        f0=np.array([100.0, 200.0]),
        floor=70.0,
        ceiling=600.0,
        step=0.01,
    )
    mean, std, lo, hi, rng = prosody.pitch_stats(contour)
    assert mean == pytest.approx(150.0)
    assert std == pytest.approx(50.0)  # population std
    assert (lo, hi, rng) == (100.0, 200.0, 100.0)


def test_rhythm_merge_rules():
    # AA AA | P | sil | AA : first two vowels merge, silence breaks the run
    tier = _tier(
        [
            (0.0, 0.1, "AA"),
            (0.1, 0.25, "IY"),
            (0.25, 0.3, "P"),
            (0.3, 0.5, "sil"),
            (0.5, 0.7, "AA"),
        ]
    )
    ri = prosody.build_rhythm_intervals(tier, PROFILE)
    assert ri.vocalic == pytest.approx((0.25, 0.2))
    assert ri.consonantal == pytest.approx((0.05,))


def test_pvi_reference_values():
    # rPVI of [100, 200] ms = 100; nPVI = 100 * (100/150) = 66.667
    rpvi, npvi = prosody._pvi(np.array([100.0, 200.0]))
    assert rpvi == pytest.approx(100.0)
    assert npvi == pytest.approx(66.6667, abs=1e-3)
    with pytest.raises(TooFewIntervals):
        prosody._pvi(np.array([100.0]))


def test_percent_v():
    ri = prosody.RhythmIntervals(vocalic=(0.2, 0.2), consonantal=(0.3, 0.3))
    metrics = prosody.rhythm_metrics(ri)
    assert metrics[0] == pytest.approx(40.0)


def test_rhythm_metrics_short_lists_nan():
    ri = prosody.RhythmIntervals(vocalic=(0.2,), consonantal=())
    m = prosody.rhythm_metrics(ri)
    percent_v = m[0]
    assert percent_v == pytest.approx(100.0)
    # single vocalic interval: delta/varco defined (0), PVIs undefined
    assert np.isnan(m[5]) and np.isnan(m[7])
    # no consonantal intervals at all: everything consonantal is NaN
    assert np.isnan(m[2]) and np.isnan(m[4]) and np.isnan(m[6]) and np.isnan(m[8])


def _npvi_direct(d):
    total = 0.0
    for a, b in zip(d, d[1:]):
        total += abs(a - b) / ((a + b) / 2.0)
    return 100.0 * total / (len(d) - 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1.0, 500.0), min_size=2, max_size=40))
def test_npvi_matches_direct_summation(durations):
    d = np.array(durations)
    rpvi, npvi = prosody._pvi(d)
    assert npvi == pytest.approx(_npvi_direct(d), rel=1e-9, abs=1e-9)
    assert rpvi == pytest.approx(np.mean(np.abs(np.diff(d))), rel=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.02, 0.5), min_size=2, max_size=20),
    st.floats(0.1, 10.0),
)
def test_npvi_scale_invariant_rpvi_scales(durations, scale):
    """nPVI is dimensionless; rPVI scales linearly with duration units."""
    d = np.array(durations)
    r1, n1 = prosody._pvi(d)
    r2, n2 = prosody._pvi(d * scale)
    assert n1 == pytest.approx(n2, rel=1e-9)
    assert r2 == pytest.approx(r1 * scale, rel=1e-9)


def test_speaking_rate_times_duration_is_syllable_count():
    entries = [(0.0, 0.2, "K"), (0.2, 0.5, "UW"), (0.5, 0.8, "AA"), (0.8, 1.3, "sil")]
    tier = _tier(entries)
    spans = [(0.0, 0.8, False), (0.8, 1.3, True)]
    sr, *_ = prosody.speech_rate_features(tier, spans, PROFILE)
    assert sr * tier.duration == pytest.approx(2.0)
