"""Low-level acoustic analysis: pitch, glottal pulses, intensity, formants, silence.

Everything here is a pure function of an AudioClip (plus optional annotation),
feeding the measurement modules.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ClipTooShort, NoFormantsFound

PITCH_WINDOW = 0.040
PITCH_HOP = 0.010
VOICING_THRESHOLD = 0.45
OCTAVE_COST = 0.05

INTENSITY_WINDOW = 0.020
INTENSITY_HOP = 0.010
# full-scale sine (amplitude 1, rms 1/sqrt(2)) reads 100.0 dB
INTENSITY_REF = 10.0 ** (-100.0 / 20.0) / np.sqrt(2.0)
INTENSITY_FLOOR_DB = 0.0

FORMANT_WINDOW = 0.025
PRE_EMPHASIS = 0.97
BANDWIDTH_MAX = 400.0

SILENCE_REL_DB = 25.0


@dataclass(frozen=True)
class PitchContour:
    """Frame-wise F0 track; unvoiced frames are NaN."""

    times: np.ndarray
    f0: np.ndarray
    floor: float
    ceiling: float
    step: float

    @property
    def voiced(self):
        return ~np.isnan(self.f0)

    def voiced_values(self):
        return self.f0[self.voiced]


@dataclass(frozen=True)
class PulseTrain:
    pulse_times: np.ndarray

    def periods(self):
        return np.diff(self.pulse_times)

    def __len__(self):
        return len(self.pulse_times)


@dataclass(frozen=True)
class IntensityContour:
    times: np.ndarray
    levels_db: np.ndarray
    floor_db: float = INTENSITY_FLOOR_DB

    def qualifying(self):
        return self.levels_db[self.levels_db > self.floor_db]


@dataclass(frozen=True)
class FormantSlice:
    time: float
    f1: float
    f2: float


def _normalized_autocorr(x):
    """Normalized cross-correlation of a frame with itself at all lags.

    ncc[tau] = sum x[n] x[n+tau] / sqrt(sum_{n<N-tau} x[n]^2 * sum_{n>=tau} x[n]^2)
    """
    n = len(x)
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    spec = np.fft.rfft(x, nfft)
    ac = np.fft.irfft(spec * np.conj(spec))[:n]
    sq = x * x
    csum = np.concatenate(([0.0], np.cumsum(sq)))
    total = csum[-1]
    lags = np.arange(n)
    head = csum[n - lags]          # energy of x[0 : n-tau]
    tail = total - csum[lags]      # energy of x[tau : n]
    denom = np.sqrt(head * tail)
    with np.errstate(invalid="ignore", divide="ignore"):
        ncc = np.where(denom > 0, ac / denom, 0.0)
    return ncc


def _best_peak(ncc, lag_min, lag_max):
    """Best local maximum of ncc in [lag_min, lag_max] with an octave cost.

    Returns (lag, value) with parabolic interpolation, or (None, best value)
    when no local maximum exists in range.
    """
    lo = max(lag_min, 1)
    hi = min(lag_max, len(ncc) - 2)
    if hi <= lo:
        return None, 0.0
    seg = ncc[lo:hi + 1]
    is_max = (seg >= ncc[lo - 1:hi]) & (seg >= ncc[lo + 1:hi + 2])
    cand = np.nonzero(is_max)[0]
    if len(cand) == 0:
        return None, float(np.max(seg))
    lags = cand + lo
    # small preference for shorter lags suppresses subharmonic picks
    scores = seg[cand] - OCTAVE_COST * np.log2(lags / lo)
    best = int(np.argmax(scores))
    k = int(lags[best])
    y0, y1, y2 = ncc[k - 1], ncc[k], ncc[k + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if abs(denom) > 1e-12 else 0.0
    shift = float(np.clip(shift, -0.5, 0.5))
    peak_val = float(y1 - 0.25 * (y0 - y2) * shift)
    return k + shift, min(peak_val, 1.0)


def frame_autocorr_peak(clip, t, floor, ceiling, window=PITCH_WINDOW):
    """Normalized-autocorrelation peak of the frame centered at t.

    Returns (lag_seconds, peak) or (None, peak) when no candidate lies in
    the [floor, ceiling] lag range.
    """
    sr = clip.sample_rate
    half = int(round(window * sr / 2))
    center = int(round(t * sr))
    lo, hi = max(0, center - half), min(len(clip.samples), center + half)
    x = clip.samples[lo:hi]
    if len(x) < 4 or np.all(x == 0):
        return None, 0.0
    x = x - np.mean(x)
    if np.all(x == 0):
        return None, 0.0
    ncc = _normalized_autocorr(x)
    lag_min = int(np.floor(sr / ceiling))
    lag_max = int(np.ceil(sr / floor))
    lag, peak = _best_peak(ncc, lag_min, lag_max)
    if lag is None:
        return None, peak
    return lag / sr, peak


def pitch_track(clip, floor=70.0, ceiling=600.0):
    """Frame-wise F0 by normalized autocorrelation with parabolic interpolation.

    Frames whose peak correlation falls below the voicing threshold are
    marked unvoiced (NaN).
    """
    if clip.duration < 3.0 / floor:
        raise ClipTooShort(f"need at least {3.0 / floor:.3f} s for floor {floor} Hz")
    half = PITCH_WINDOW / 2
    times = np.arange(half, clip.duration - half + 1e-9, PITCH_HOP)
    f0 = np.full(len(times), np.nan)
    for i, t in enumerate(times):
        lag, peak = frame_autocorr_peak(clip, t, floor, ceiling)
        if lag is None or peak < VOICING_THRESHOLD:
            continue
        cand = 1.0 / lag
        if floor <= cand <= ceiling:
            f0[i] = cand
    return PitchContour(times=times, f0=f0, floor=floor, ceiling=ceiling, step=PITCH_HOP)


def _voiced_regions(contour):
    """Runs of consecutive voiced frames as (start_idx, end_idx) inclusive."""
    voiced = contour.voiced
    regions = []
    start = None
    for i, v in enumerate(voiced):
        if v and start is None:
            start = i
        elif not v and start is not None:
            regions.append((start, i - 1))
            start = None
    if start is not None:
        regions.append((start, len(voiced) - 1))
    return regions


def detect_pulses(clip, contour):
    """One pulse per glottal cycle, at the waveform extremum of each period.

    Pulses are tracked forward through each voiced region: the next pulse is
    the absolute peak within [t + 0.8 T, t + 1.25 T] of the local period T.
    """
    sr = clip.sample_rate
    x = clip.samples
    pulses = []
    for i0, i1 in _voiced_regions(contour):
        times = contour.times[i0:i1 + 1]
        f0s = contour.f0[i0:i1 + 1]

        def period_at(t):
            f = np.interp(t, times, f0s)
            return 1.0 / f

        # frames see half a window beyond their centers; let the region too
        t_start = max(0.0, times[0] - PITCH_WINDOW / 2)
        t_end = min(clip.duration, times[-1] + PITCH_WINDOW / 2)
        # seed: strongest extremum within the first period of the region
        T = period_at(times[0])
        a = int(round(t_start * sr))
        b = min(len(x), a + int(round(T * sr)) + 1)
        # the leading half-window may still be silent; slide forward one
        # period at a time until the seed window contains signal
        while b > a and np.max(np.abs(x[a:b])) <= 0 and a / sr < t_end:
            a = b - 1
            b = min(len(x), a + int(round(T * sr)) + 1)
        if b <= a or np.max(np.abs(x[a:b])) <= 0:
            continue
        seg = np.abs(x[a:b])
        t = (a + int(np.argmax(seg))) / sr
        region_pulses = [t]
        while True:
            T = period_at(min(max(t, times[0]), times[-1]))
            a = int(round((t + 0.8 * T) * sr))
            b = int(round((t + 1.25 * T) * sr)) + 1
            if a >= len(x) or t + 0.8 * T > t_end + T / 2:
                break
            b = min(b, len(x))
            seg = np.abs(x[a:b])
            if len(seg) == 0 or np.max(seg) <= 0:
                break
            t = (a + int(np.argmax(seg))) / sr
            region_pulses.append(t)
        pulses.extend(region_pulses)
    pulses = np.array(sorted(set(pulses)))
    return PulseTrain(pulse_times=pulses)


def intensity_contour(clip):
    """RMS level in dB per frame; full-scale sine reads 100.0 dB.

    Frames below the floor (0 dB) are clamped to it and act as the
    excluded-silence sentinel.
    """
    sr = clip.sample_rate
    win = int(round(INTENSITY_WINDOW * sr))
    hop = int(round(INTENSITY_HOP * sr))
    half = INTENSITY_WINDOW / 2
    if len(clip.samples) < win:
        rms = np.sqrt(np.mean(clip.samples ** 2)) if len(clip.samples) else 0.0
        times = np.array([clip.duration / 2])
        levels = np.array([_to_db(rms)])
        return IntensityContour(times=times, levels_db=levels)
    sq = np.concatenate(([0.0], np.cumsum(clip.samples ** 2)))
    starts = np.arange(0, len(clip.samples) - win + 1, hop)
    rms = np.sqrt((sq[starts + win] - sq[starts]) / win)
    times = starts / sr + half
    levels = _to_db(rms)
    return IntensityContour(times=times, levels_db=levels)


def _to_db(rms):
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.asarray(rms, dtype=float) / INTENSITY_REF)
    return np.maximum(db, INTENSITY_FLOOR_DB)


def _levinson_durbin(r, order):
    """Solve the autocorrelation normal equations for LPC coefficients.

    Returns a = [1, a1, .., ap] with the prediction polynomial
    A(z) = 1 + a1 z^-1 + ... + ap z^-p.
    """
    a = np.zeros(order + 1)
    a[0] = 1.0
    err = r[0]
    for i in range(1, order + 1):
        acc = r[i] + np.dot(a[1:i], r[i - 1:0:-1])
        k = -acc / err
        a[1:i + 1] = a[1:i + 1] + k * a[i - 1::-1][:i]
        err *= 1.0 - k * k
        if err <= 0:
            break
    return a


def estimate_formants(clip, at, n_formants=2):
    """First two formant frequencies from LPC at a point in time.

    Pre-emphasized 25 ms Gaussian window, autocorrelation LPC of order
    2 + sr/1000, roots filtered by a 400 Hz bandwidth threshold.
    """
    sr = clip.sample_rate
    half = int(round(FORMANT_WINDOW * sr / 2))
    center = int(round(at * sr))
    lo, hi = center - half, center + half
    if lo < 0 or hi > len(clip.samples):
        raise NoFormantsFound(f"window around {at:.3f}s lies outside the clip")
    x = clip.samples[lo:hi].copy()
    x[1:] -= PRE_EMPHASIS * x[:-1]
    n = len(x)
    idx = np.arange(n) - (n - 1) / 2
    x = x * np.exp(-0.5 * (idx / (0.4 * n / 2)) ** 2)
    if np.max(np.abs(x)) == 0:
        raise NoFormantsFound("silent analysis window")
    order = int(round(2 + sr / 1000))
    full = np.correlate(x, x, mode="full")
    r = full[n - 1:n + order]
    if r[0] <= 0:
        raise NoFormantsFound("degenerate window")
    a = _levinson_durbin(r, order)
    roots = np.roots(a)
    roots = roots[np.imag(roots) > 0]
    freqs = np.angle(roots) * sr / (2 * np.pi)
    with np.errstate(divide="ignore"):
        bws = -np.log(np.abs(roots)) * sr / np.pi
    keep = (freqs > 90.0) & (freqs < sr / 2 - 50.0) & (bws < BANDWIDTH_MAX)
    cand = np.sort(freqs[keep])
    if len(cand) < n_formants:
        raise NoFormantsFound(f"only {len(cand)} qualifying roots")
    return FormantSlice(time=at, f1=float(cand[0]), f2=float(cand[1]))


def segment_silence(clip, tier=None, profile=None):
    """Silence segmentation as (start, end, is_silent) spans over the clip.

    With an annotation tier, silence is exactly the tier's silence-labeled
    intervals. Without one, frames more than 25 dB below the 99th-percentile
    intensity are silent.
    """
    if tier is not None:
        if profile is None:
            raise ValueError("profile required to interpret tier labels")
        spans = []
        for iv in tier:
            flag = profile.is_silence(iv.label)
            if spans and spans[-1][2] == flag and abs(spans[-1][1] - iv.start) < 1e-9:
                spans[-1] = (spans[-1][0], iv.end, flag)
            else:
                spans.append((iv.start, iv.end, flag))
        return spans
    contour = intensity_contour(clip)
    levels = contour.levels_db
    threshold = np.percentile(levels, 99) - SILENCE_REL_DB
    silent = levels < threshold
    half = INTENSITY_WINDOW / 2
    spans = []
    start = None
    for t, s in zip(contour.times, silent):
        if s and start is None:
            start = t - half
        elif not s and start is not None:
            spans.append((max(0.0, start), t - half, True))
            start = None
    if start is not None:
        spans.append((max(0.0, start), clip.duration, True))
    # fill speech spans between silent ones
    out = []
    cursor = 0.0
    for s0, s1, _ in spans:
        if s0 > cursor:
            out.append((cursor, s0, False))
        out.append((s0, s1, True))
        cursor = s1
    if cursor < clip.duration:
        out.append((cursor, clip.duration, False))
    return out
