"""Voice-quality measurements: jitter, shimmer, PPQ, APQ, HNR, voice breaks."""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NoVoicedFrames, TooFewPeriods
from .signal import frame_autocorr_peak

# inter-pulse gap that counts as a voice break: 1.25 / (70 Hz pitch floor),
# kept as the exact rational rather than the rounded 17.86 ms
VOICE_BREAK_THRESHOLD = Fraction(125, 7000)  # seconds


@dataclass(frozen=True)
class VoiceQualityFeatures:
    jitter_local: float
    shimmer_local: float
    ppq: float
    apq: float
    hnr: float
    num_voice_breaks: int
    degree_voice_breaks: float


def jitter_local(periods):
    """Mean absolute consecutive period difference over mean period, in %."""
    p = np.asarray(periods, dtype=float)
    if len(p) < 2:
        raise TooFewPeriods(f"need >= 2 periods, got {len(p)}")
    return float(np.mean(np.abs(np.diff(p))) / np.mean(p) * 100.0)


def shimmer_local(amplitudes):
    """Amplitude analog of local jitter, in %."""
    return jitter_local(amplitudes)


def _five_point_quotient(values):
    v = np.asarray(values, dtype=float)
    if len(v) < 5:
        raise TooFewPeriods(f"need >= 5 values, got {len(v)}")
    windows = np.lib.stride_tricks.sliding_window_view(v, 5)
    dev = np.abs(v[2:-2] - windows.mean(axis=1))
    return float(np.mean(dev) / np.mean(v) * 100.0)


def ppq(periods):
    """5-point period perturbation quotient, in %; removes slow F0 drift."""
    return _five_point_quotient(periods)


def apq(amplitudes):
    """5-point amplitude perturbation quotient, in %."""
    return _five_point_quotient(amplitudes)


def period_runs(pulses, max_period=None):
    """Split the pulse train's period list into runs of plausible periods.

    Gaps longer than the voice-break threshold separate runs; they are
    breaks, not glottal periods, and must not enter perturbation measures.
    Returns (runs, index_runs): period arrays per run and the pulse indices
    spanning each run.
    """
    if max_period is None:
        max_period = float(VOICE_BREAK_THRESHOLD)
    periods = pulses.periods()
    runs = []
    index_runs = []
    current = []
    start = 0
    for i, p in enumerate(periods):
        if p <= max_period:
            if not current:
                start = i
            current.append(p)
        elif current:
            runs.append(np.array(current))
            index_runs.append(np.arange(start, i + 1))  # pulse indices
            current = []
    if current:
        runs.append(np.array(current))
        index_runs.append(np.arange(start, len(periods) + 1))
    return runs, index_runs


def _pooled_local(runs):
    """Local perturbation pooled over runs: mean |consecutive diff| over mean value."""
    diffs = [np.abs(np.diff(r)) for r in runs if len(r) >= 2]
    values = [r for r in runs if len(r) >= 1]
    n_diffs = sum(len(d) for d in diffs)
    if n_diffs == 0:
        raise TooFewPeriods("no consecutive period pairs")
    mean_diff = float(np.concatenate(diffs).mean())
    mean_value = float(np.concatenate(values).mean())
    return mean_diff / mean_value * 100.0


def _pooled_quotient(runs):
    """5-point quotient pooled over runs."""
    windows = []
    values = []
    for r in runs:
        values.append(r)
        if len(r) >= 5:
            w = np.lib.stride_tricks.sliding_window_view(r, 5)
            windows.append(np.abs(r[2:-2] - w.mean(axis=1)))
    if not windows:
        raise TooFewPeriods("no 5-point windows")
    return float(np.concatenate(windows).mean() / np.concatenate(values).mean() * 100.0)


def pulse_amplitudes(clip, pulses):
    """Peak amplitude near each pulse: |waveform| max within +-25% of the local period."""
    times = pulses.pulse_times
    if len(times) == 0:
        return np.array([])
    sr = clip.sample_rate
    periods = np.diff(times)
    amps = np.empty(len(times))
    for i, t in enumerate(times):
        if len(periods) == 0:
            local = 0.01
        elif i == 0:
            local = periods[0]
        elif i == len(times) - 1:
            local = periods[-1]
        else:
            local = min(periods[i - 1], periods[i])
        a = max(0, int(round((t - 0.25 * local) * sr)))
        b = min(len(clip.samples), int(round((t + 0.25 * local) * sr)) + 1)
        amps[i] = np.max(np.abs(clip.samples[a:b])) if b > a else 0.0
    return amps


def frame_hnr_db(r):
    """HNR of a single frame from its autocorrelation peak r."""
    r = min(max(r, 1e-15), 1.0 - 1e-15)
    return float(10.0 * np.log10(r / (1.0 - r)))


def hnr(clip, contour):
    """Harmonics-to-noise ratio in dB over the voiced frames.

    The per-frame autocorrelation peaks are averaged before the dB
    conversion; the single-frame estimates of 1-r are too noisy for clean
    signals and would dominate a mean taken in the dB domain.
    """
    voiced = contour.voiced
    if not np.any(voiced):
        raise NoVoicedFrames("no voiced frames in contour")
    peaks = []
    for t, f in zip(contour.times[voiced], contour.f0[voiced]):
        lag, peak = frame_autocorr_peak(clip, t, contour.floor, contour.ceiling)
        if lag is not None:
            peaks.append(peak)
    if not peaks:
        raise NoVoicedFrames("no usable autocorrelation peaks")
    return frame_hnr_db(float(np.mean(peaks)))


def voice_breaks(pulses, total_duration):
    """(count, degree %) of inter-pulse intervals longer than the break threshold."""
    if total_duration <= 0:
        raise ValueError("total_duration must be positive")
    gaps = pulses.periods()
    threshold = float(VOICE_BREAK_THRESHOLD)
    breaks = gaps[gaps > threshold]
    count = int(len(breaks))
    degree = 100.0 * float(np.sum(breaks)) / total_duration if count else 0.0
    return count, min(degree, 100.0)


def voice_quality_features(clip, contour, pulses):
    """Assemble the seven voice-quality measurements for one utterance.

    Returns NaN for measurements whose preconditions fail (too few pulses,
    no voiced frames).
    """
    runs, index_runs = period_runs(pulses)
    amps = pulse_amplitudes(clip, pulses)
    amp_runs = [amps[idx] for idx in index_runs]

    def _try(fn, *args):
        try:
            return fn(*args)
        except TooFewPeriods:
            return float("nan")

    try:
        hnr_db = hnr(clip, contour)
    except NoVoicedFrames:
        hnr_db = float("nan")
    n_breaks, degree = voice_breaks(pulses, clip.duration)
    return VoiceQualityFeatures(
        jitter_local=_try(_pooled_local, runs),
        shimmer_local=_try(_pooled_local, amp_runs),
        ppq=_try(_pooled_quotient, runs),
        apq=_try(_pooled_quotient, amp_runs),
        hnr=hnr_db,
        num_voice_breaks=n_breaks,
        degree_voice_breaks=degree,
    )
