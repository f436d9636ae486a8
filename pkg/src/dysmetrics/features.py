"""The 39-measurement feature vector and per-utterance extraction."""

from dataclasses import dataclass

import numpy as np

from . import pronunciation, prosody, voice_quality
from .corpus import read_wav, parse_annotation
from .errors import DysmetricsError, MissingCornerNoMean, NoQualifyingFrames
from .signal import detect_pulses, intensity_contour, pitch_track, segment_silence

VOICE_QUALITY_FEATURES = (
    "jitter",
    "shimmer",
    "PPQ",
    "APQ",
    "HNR",
    "num_voice_breaks",
    "degree_voice_breaks",
)
PRONUNCIATION_FEATURES = (
    "PCC",
    "PCV",
    "PCP",
    "triangular_VSA",
    "quadrilateral_VSA",
    "FCR",
    "VAI",
    "F2_ratio",
)
PROSODY_FEATURES = (
    "speaking_rate",
    "articulation_rate",
    "num_pauses",
    "pause_duration",
    "phone_ratio",
    "F0_mean",
    "F0_std",
    "F0_min",
    "F0_max",
    "F0_range",
    "energy_mean",
    "energy_std",
    "energy_min",
    "energy_max",
    "energy_range",
    "percentV",
    "deltaV",
    "deltaC",
    "VarcoV",
    "VarcoC",
    "rPVIV",
    "rPVIC",
    "nPVIV",
    "nPVIC",
)

FEATURE_NAMES = VOICE_QUALITY_FEATURES + PRONUNCIATION_FEATURES + PROSODY_FEATURES

FEATURE_DIMENSIONS = {
    **{name: "voice quality" for name in VOICE_QUALITY_FEATURES},
    **{name: "pronunciation" for name in PRONUNCIATION_FEATURES},
    **{name: "prosody" for name in PROSODY_FEATURES},
}


@dataclass(frozen=True)
class FeatureRow:
    utterance_id: str
    speaker_id: str
    severity: str
    values: dict  # feature name -> float (NaN marks an absent entry)


def collect_speaker_corner_means(records, profile, base_dir=None):
    """First pass: average measured corner-vowel formants per speaker.

    Feeds the interpolation of corner vowels missing from an utterance.
    """
    sums = {}
    for record in records:
        try:
            clip = read_wav(_resolve(record.audio_path, base_dir))
            tier = parse_annotation(_resolve(record.annotation_path, base_dir), profile)
        except (DysmetricsError, OSError):
            continue
        measured = pronunciation.measure_corner_formants(tier, clip, profile)
        spk = sums.setdefault(record.speaker_id, {})
        for role, (f1, f2) in measured.items():
            acc = spk.setdefault(role, [0.0, 0.0, 0])
            acc[0] += f1
            acc[1] += f2
            acc[2] += 1
    means = {}
    for spk, roles in sums.items():
        means[spk] = {
            role: (acc[0] / acc[2], acc[1] / acc[2]) for role, acc in roles.items()
        }
    return means


def _resolve(path, base_dir):
    if base_dir is None:
        return path
    from pathlib import Path

    p = Path(path)
    return p if p.is_absolute() else Path(base_dir) / p


def extract_features(record, profile, speaker_means=None, base_dir=None):
    """Compute the full 39-entry measurement vector for one utterance.

    Measurements whose inputs are unavailable (no decoded phonemes, missing
    corner vowels without speaker means, too few intervals) come back NaN.
    """
    clip = read_wav(_resolve(record.audio_path, base_dir))
    tier = parse_annotation(_resolve(record.annotation_path, base_dir), profile)
    contour = pitch_track(clip)
    pulses = detect_pulses(clip, contour)
    intensity = intensity_contour(clip)
    silence_spans = segment_silence(clip, tier, profile)

    values = {name: float("nan") for name in FEATURE_NAMES}

    vq = voice_quality.voice_quality_features(clip, contour, pulses)
    values["jitter"] = vq.jitter_local
    values["shimmer"] = vq.shimmer_local
    values["PPQ"] = vq.ppq
    values["APQ"] = vq.apq
    values["HNR"] = vq.hnr
    values["num_voice_breaks"] = float(vq.num_voice_breaks)
    values["degree_voice_breaks"] = vq.degree_voice_breaks

    if record.decoded_phonemes is not None:
        alignment = pronunciation.align_phoneme_sequences(
            record.canonical_phonemes, record.decoded_phonemes
        )
        pcc, pcv, pcp = pronunciation.phoneme_correctness(alignment, profile)
        values["PCC"], values["PCV"], values["PCP"] = pcc, pcv, pcp

    try:
        corners = pronunciation.corner_vowel_formants(
            tier, clip, profile, (speaker_means or {}).get(record.speaker_id)
        )
        tvsa, qvsa, fcr, vai, f2_ratio = pronunciation.vowel_space_metrics(corners)
        values["triangular_VSA"] = tvsa
        values["quadrilateral_VSA"] = qvsa if qvsa is not None else float("nan")
        values["FCR"] = fcr
        values["VAI"] = vai
        values["F2_ratio"] = f2_ratio
    except MissingCornerNoMean:
        pass

    sr_feats = prosody.speech_rate_features(tier, silence_spans, profile)
    for name, value in zip(
        ("speaking_rate", "articulation_rate", "num_pauses", "pause_duration", "phone_ratio"),
        sr_feats,
    ):
        values[name] = float(value)

    try:
        f0_stats = prosody.pitch_stats(contour)
        for name, value in zip(("F0_mean", "F0_std", "F0_min", "F0_max", "F0_range"), f0_stats):
            values[name] = value
    except NoQualifyingFrames:
        pass
    try:
        en_stats = prosody.energy_stats(intensity)
        for name, value in zip(
            ("energy_mean", "energy_std", "energy_min", "energy_max", "energy_range"), en_stats
        ):
            values[name] = value
    except NoQualifyingFrames:
        pass

    ri = prosody.build_rhythm_intervals(tier, profile)
    rhythm = prosody.rhythm_metrics(ri)
    for name, value in zip(
        ("percentV", "deltaV", "deltaC", "VarcoV", "VarcoC", "rPVIV", "rPVIC", "nPVIV", "nPVIC"),
        rhythm,
    ):
        values[name] = value

    return FeatureRow(
        utterance_id=record.utterance_id,
        speaker_id=record.speaker_id,
        severity=record.severity,
        values=values,
    )


def rows_to_matrix(rows, feature_names=FEATURE_NAMES):
    """Stack FeatureRows into (X, utterance_ids, speaker_ids, severities)."""
    X = np.array([[row.values.get(n, np.nan) for n in feature_names] for row in rows])
    utt = [row.utterance_id for row in rows]
    spk = [row.speaker_id for row in rows]
    sev = [row.severity for row in rows]
    return X, utt, spk, sev
