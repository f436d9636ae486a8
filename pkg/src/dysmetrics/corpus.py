"""Corpus ingestion: manifests, WAV audio, interval annotations, language profiles."""

import json
import re
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    MalformedRecord,
    OverlappingIntervals,
    TruncatedFile,
    UnknownLabel,
    UnknownPhoneme,
    UnknownSeverity,
    UnorderedIntervals,
    UnsupportedFormat,
)

SEVERITIES = ("healthy", "mild", "moderate", "severe")

PROFILE_DIR = Path(__file__).parent / "profiles"


@dataclass(frozen=True)
class AudioClip:
    """Mono audio, samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.sample_rate < 8000:
            raise ValueError(f"sample_rate {self.sample_rate} < 8000")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("non-finite samples")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class Interval:
    start: float
    end: float
    label: str

    @property
    def duration(self):
        return self.end - self.start

    @property
    def midpoint(self):
        return 0.5 * (self.start + self.end)


@dataclass(frozen=True)
class AnnotationTier:
    """Ordered, non-overlapping labeled time intervals."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple(self.intervals)
        object.__setattr__(self, "intervals", ivs)
        for iv in ivs:
            if not iv.start < iv.end:
                raise UnorderedIntervals(f"interval ({iv.start}, {iv.end}) has start >= end")
        for a, b in zip(ivs, ivs[1:]):
            if b.start < a.start:
                raise UnorderedIntervals(f"interval at {b.start} out of order")
            if b.start < a.end - 1e-9:
                raise OverlappingIntervals(f"intervals ({a.start},{a.end}) and ({b.start},{b.end}) overlap")

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    @property
    def duration(self):
        return self.intervals[-1].end if self.intervals else 0.0


@dataclass(frozen=True)
class LanguageProfile:
    """Symbol inventory for one language."""

    vowel_labels: frozenset
    consonant_labels: frozenset
    silence_labels: frozenset
    corner_vowels: dict  # role ("i","a","u","ae") -> symbol
    nuclei_labels: frozenset

    def __post_init__(self):
        v, c, s = self.vowel_labels, self.consonant_labels, self.silence_labels
        if v & c or v & s or c & s:
            raise ValueError("vowel/consonant/silence label sets must be disjoint")
        for role in ("i", "a", "u"):
            if role not in self.corner_vowels:
                raise ValueError(f"corner vowel /{role}/ missing from profile")
        if not self.nuclei_labels <= v:
            raise ValueError("nuclei_labels must be a subset of vowel_labels")

    @property
    def phoneme_labels(self):
        return self.vowel_labels | self.consonant_labels

    def is_silence(self, label):
        return label in self.silence_labels

    def classify(self, label):
        """'vowel', 'consonant', 'silence', or None."""
        if label in self.vowel_labels:
            return "vowel"
        if label in self.consonant_labels:
            return "consonant"
        if label in self.silence_labels:
            return "silence"
        return None


@dataclass(frozen=True)
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    severity: str
    audio_path: str
    annotation_path: str
    canonical_phonemes: tuple
    decoded_phonemes: tuple | None = None

    def __post_init__(self):
        if not self.utterance_id or not self.speaker_id:
            raise ValueError("empty id")
        if self.severity not in SEVERITIES:
            raise ValueError(f"illegal severity {self.severity!r}")
        if not self.canonical_phonemes:
            raise ValueError("canonical_phonemes empty")


def load_profile(path):
    """Load a LanguageProfile from its JSON document."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return LanguageProfile(
        vowel_labels=frozenset(doc["vowel_labels"]),
        consonant_labels=frozenset(doc["consonant_labels"]),
        silence_labels=frozenset(doc["silence_labels"]),
        corner_vowels=dict(doc["corner_vowels"]),
        nuclei_labels=frozenset(doc["nuclei_labels"]),
    )


def builtin_profile(name):
    """Load one of the shipped profiles: 'english', 'korean', 'tamil'."""
    return load_profile(PROFILE_DIR / f"{name}.json")


def parse_manifest(path, profile):
    """Parse a JSON-lines manifest into validated UtteranceRecords.

    Every line must be a valid record; the first bad line raises with its
    line number, so nothing is silently dropped.
    """
    records = []
    vocab = profile.phoneme_labels | profile.silence_labels
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON: {exc}") from exc
            try:
                severity = doc["severity"]
            except KeyError:
                raise MalformedRecord(line_no, "missing field 'severity'")
            if severity not in SEVERITIES:
                raise UnknownSeverity(line_no, severity)
            try:
                canonical = tuple(doc["canonical"].split())
                decoded = tuple(doc["decoded"].split()) if doc.get("decoded") is not None else None
                record = UtteranceRecord(
                    utterance_id=doc["utt_id"],
                    speaker_id=doc["speaker_id"],
                    severity=severity,
                    audio_path=doc["audio"],
                    annotation_path=doc["annotation"],
                    canonical_phonemes=canonical,
                    decoded_phonemes=decoded,
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise MalformedRecord(line_no, str(exc)) from exc
            for seq in (canonical, decoded or ()):
                for sym in seq:
                    if sym not in vocab:
                        raise UnknownPhoneme(line_no, sym)
            records.append(record)
    return records


def read_wav(path):
    """Read a PCM WAV file (16-bit int or 32-bit float) into an AudioClip.

    Multichannel audio is mean-downmixed; integer samples are rescaled to
    [-1, 1] by the full-scale divisor (32768 for 16-bit).
    """
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            sample_rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        # wave rejects WAVE_FORMAT_IEEE_FLOAT; fall back to a manual parse
        clip = _read_float_wav(path)
        if clip is not None:
            return clip
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise TruncatedFile(str(path)) from exc
    if sampwidth != 2:
        raise UnsupportedFormat(f"{path}: {8 * sampwidth}-bit PCM not supported")
    expected = n_frames * n_channels * sampwidth
    if len(raw) < expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return _finish_clip(data, n_channels, sample_rate, path)


def _read_float_wav(path):
    """Minimal RIFF parser for 32-bit float WAV (format tag 3)."""
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        return None
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        size = int.from_bytes(blob[pos + 4:pos + 8], "little")
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            if len(body) < size:
                raise TruncatedFile(str(path))
            data = body
        pos += 8 + size + (size % 2)
    if fmt is None or data is None:
        raise TruncatedFile(str(path))
    tag = int.from_bytes(fmt[0:2], "little")
    n_channels = int.from_bytes(fmt[2:4], "little")
    sample_rate = int.from_bytes(fmt[4:8], "little")
    bits = int.from_bytes(fmt[14:16], "little")
    if tag != 3 or bits != 32:
        raise UnsupportedFormat(f"{path}: format tag {tag}, {bits}-bit")
    samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
    return _finish_clip(samples, n_channels, sample_rate, path)


def _finish_clip(flat, n_channels, sample_rate, path):
    if n_channels > 1:
        usable = len(flat) - len(flat) % n_channels
        flat = flat[:usable].reshape(-1, n_channels).mean(axis=1)
    if not np.all(np.isfinite(flat)):
        raise UnsupportedFormat(f"{path}: non-finite samples")
    return AudioClip(samples=flat, sample_rate=sample_rate)


def write_wav(path, clip):
    """Write an AudioClip as 16-bit PCM WAV (used by the fixture generator)."""
    scaled = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(scaled.tobytes())


def parse_annotation(path, profile):
    """Parse an annotation tier (plain text or TextGrid interval tier).

    Labels are validated against the profile vocabulary; empty TextGrid
    labels are normalized to the profile's canonical silence symbol.
    """
    text = Path(path).read_text(encoding="utf-8")
    if "ooTextFile" in text.split("\n", 1)[0]:
        entries = _parse_textgrid(text)
    else:
        entries = _parse_plain_tier(text)
    silence_default = sorted(profile.silence_labels)[0] if profile.silence_labels else ""
    intervals = []
    for start, end, label in entries:
        label = label.strip()
        if label == "":
            label = silence_default
        if profile.classify(label) is None:
            raise UnknownLabel(f"{path}: label {label!r} not in profile")
        intervals.append(Interval(start, end, label))
    return AnnotationTier(intervals=tuple(intervals))


def _parse_plain_tier(text):
    entries = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        if len(parts) < 3:
            raise MalformedRecord(line_no, f"expected '<start> <end> <label>', got {line!r}")
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise MalformedRecord(line_no, f"bad interval bounds in {line!r}") from exc
        entries.append((start, end, parts[2]))
    return entries


def _parse_textgrid(text):
    """Read the first interval tier of a short- or long-form TextGrid."""
    # Token stream of numbers and quoted strings covers both forms: an
    # interval tier is "IntervalTier" name xmin xmax n (start end label)*n.
    tokens = []
    text = re.sub(r"\[\s*\d+\s*\]", "", text)  # drop long-form index brackets
    for m in _TOKEN_RE.finditer(text):
        if m.group(1) is not None:
            tokens.append(m.group(1).replace('""', '"'))
        else:
            tokens.append(float(m.group(2)))
    try:
        idx = tokens.index("IntervalTier")
    except ValueError:
        raise UnsupportedFormat("no IntervalTier found in TextGrid")
    # skip tier name, tier xmin, tier xmax
    n = int(tokens[idx + 4])
    entries = []
    pos = idx + 5
    for _ in range(n):
        start, end, label = tokens[pos], tokens[pos + 1], tokens[pos + 2]
        if not isinstance(label, str):
            raise UnsupportedFormat("malformed TextGrid interval")
        entries.append((float(start), float(end), label))
        pos += 3
    return entries


_TOKEN_RE = re.compile(r'"((?:[^"]|"")*)"|(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)')


def serialize_annotation(tier, textgrid=False):
    """Render a tier back to text; inverse of parse_annotation."""
    if not textgrid:
        return "".join(f"{iv.start:.6f} {iv.end:.6f} {iv.label}\n" for iv in tier)
    xmin = tier.intervals[0].start if len(tier) else 0.0
    xmax = tier.duration
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"{xmin:.6f}",
        f"{xmax:.6f}",
        "<exists>",
        "1",
        '"IntervalTier"',
        '"phones"',
        f"{xmin:.6f}",
        f"{xmax:.6f}",
        str(len(tier)),
    ]
    for iv in tier:
        lines += [f"{iv.start:.6f}", f"{iv.end:.6f}", f'"{iv.label}"']
    return "\n".join(lines) + "\n"
