"""Prosody measurements: speech rate, pitch/loudness statistics, rhythm metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import NoQualifyingFrames, TooFewIntervals, UnclassifiedSymbol, ZeroDuration

PAUSE_MIN_DURATION = 0.1  # silent spans longer than this count as pauses


@dataclass(frozen=True)
class RhythmIntervals:
    """Vocalic and consonantal interval durations, in seconds."""

    vocalic: tuple
    consonantal: tuple


def speech_rate_features(tier, silence_spans, profile):
    """(speaking_rate, articulation_rate, num_pauses, pause_duration, phone_ratio).

    Syllables are counted as nucleus-labeled intervals; pauses are silent
    spans longer than 0.1 s.
    """
    total = tier.duration
    if total <= 0:
        raise ZeroDuration("tier covers no time")
    syllables = sum(1 for iv in tier if iv.label in profile.nuclei_labels)
    pauses = [(s, e) for s, e, silent in silence_spans if silent and (e - s) > PAUSE_MIN_DURATION]
    pause_duration = float(sum(e - s for s, e in pauses))
    silent_total = float(sum(e - s for s, e, silent in silence_spans if silent))
    speaking_rate = syllables / total
    articulated = total - pause_duration
    articulation_rate = syllables / articulated if articulated > 0 else float("nan")
    phone_ratio = (total - silent_total) / total
    return speaking_rate, articulation_rate, len(pauses), pause_duration, phone_ratio


def _five_stats(values):
    v = np.asarray(values, dtype=float)
    mean = float(np.mean(v))
    std = float(np.std(v))  # population convention
    vmin = float(np.min(v))
    vmax = float(np.max(v))
    return mean, std, vmin, vmax, vmax - vmin


def pitch_stats(contour):
    """(mean, std, min, max, range) of F0 over voiced frames."""
    voiced = contour.voiced_values()
    if len(voiced) == 0:
        raise NoQualifyingFrames("no voiced frames")
    return _five_stats(voiced)


def energy_stats(contour):
    """(mean, std, min, max, range) of level over frames above the 0 dB sentinel."""
    levels = contour.qualifying()
    if len(levels) == 0:
        raise NoQualifyingFrames("no frames above the silence floor")
    return _five_stats(levels)


def build_rhythm_intervals(tier, profile):
    """Merge consecutive same-class phone intervals; silences break runs."""
    vocalic = []
    consonantal = []
    run_class = None
    run_duration = 0.0

    def flush():
        nonlocal run_class, run_duration
        if run_class == "vowel":
            vocalic.append(run_duration)
        elif run_class == "consonant":
            consonantal.append(run_duration)
        run_class = None
        run_duration = 0.0

    prev_end = None
    for iv in tier:
        cls = profile.classify(iv.label)
        if cls is None:
            raise UnclassifiedSymbol(iv.label)
        if cls == "silence":
            flush()
            prev_end = iv.end
            continue
        contiguous = prev_end is None or abs(iv.start - prev_end) < 1e-9
        if cls != run_class or not contiguous:
            flush()
            run_class = cls
        run_duration += iv.duration
        prev_end = iv.end
    flush()
    return RhythmIntervals(vocalic=tuple(vocalic), consonantal=tuple(consonantal))


def _pvi(durations_ms):
    d = np.asarray(durations_ms, dtype=float)
    if len(d) < 2:
        raise TooFewIntervals("PVI needs at least 2 intervals")
    diffs = np.abs(np.diff(d))
    rpvi = float(np.mean(diffs))
    npvi = float(100.0 * np.mean(diffs / ((d[:-1] + d[1:]) / 2.0)))
    return rpvi, npvi


def rhythm_metrics(ri):
    """The nine rhythm measurements from vocalic/consonantal durations.

    Returns (percent_v, delta_v, delta_c, varco_v, varco_c, rpvi_v, rpvi_c,
    npvi_v, npvi_c); deltas and rPVIs in milliseconds. Measurements whose
    interval list is too short come back as NaN rather than aborting the
    rest of the vector.
    """
    voc = np.asarray(ri.vocalic, dtype=float)
    con = np.asarray(ri.consonantal, dtype=float)
    total = voc.sum() + con.sum()
    percent_v = 100.0 * voc.sum() / total if total > 0 else float("nan")

    def delta_varco(d):
        if len(d) == 0:
            return float("nan"), float("nan")
        delta = float(np.std(d) * 1000.0)
        varco = 100.0 * delta / (float(np.mean(d)) * 1000.0)
        return delta, varco

    delta_v, varco_v = delta_varco(voc)
    delta_c, varco_c = delta_varco(con)

    def pvi_or_nan(d):
        try:
            return _pvi(d * 1000.0)
        except TooFewIntervals:
            return float("nan"), float("nan")

    rpvi_v, npvi_v = pvi_or_nan(voc)
    rpvi_c, npvi_c = pvi_or_nan(con)
    return percent_v, delta_v, delta_c, varco_v, varco_c, rpvi_v, rpvi_c, npvi_v, npvi_c
