"""Deterministic synthetic speech fixtures.

Substitutes for the licensed corpora: a pulse-train vocal source with
programmed period/amplitude perturbation and noise level, resonance-filtered
per vowel, with an annotation tier that matches the interval plan exactly.
Generator-side ground truth (period list, amplitude list) is exported so
measurement tests compare against the construction, not the measurement code.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .corpus import AnnotationTier, AudioClip, Interval, SEVERITIES, write_wav
from .errors import InvalidSpec
from .voice_quality import jitter_local

SAMPLE_RATE = 16000

# F1/F2 targets per ARPABET-style vowel label used by the generator
VOWEL_FORMANTS = {
    "IY": (300.0, 2300.0),
    "IH": (400.0, 2000.0),
    "EH": (550.0, 1850.0),
    "AE": (660.0, 1700.0),
    "AA": (850.0, 1220.0),
    "AO": (590.0, 880.0),
    "UH": (440.0, 1020.0),
    "UW": (320.0, 900.0),
    "AH": (640.0, 1190.0),
    "ER": (490.0, 1350.0),
}

RESONANCE_BANDWIDTHS = (200.0, 250.0)

# decoded-phoneme error injection rate per severity
ERROR_RATES = {"healthy": 0.0, "mild": 0.15, "moderate": 0.40, "severe": 0.70}


@dataclass(frozen=True)
class SynthSpec:
    f0: float
    jitter_pct: float
    shimmer_pct: float
    hnr_db: float
    intervals: tuple  # ((label, duration_s), ...)
    severity: str
    seed: int
    sample_rate: int = SAMPLE_RATE
    formant_shrink: float = 0.0  # 0 = full vowel space, 1 = fully centralized

    def validate(self):
        if not 80.0 <= self.f0 <= 400.0:
            raise InvalidSpec(f"f0 {self.f0} outside [80, 400] Hz")
        if not 0.0 <= self.jitter_pct <= 10.0:
            raise InvalidSpec(f"jitter {self.jitter_pct}% outside [0, 10]")
        if not 0.0 <= self.shimmer_pct <= 20.0:
            raise InvalidSpec(f"shimmer {self.shimmer_pct}% outside [0, 20]")
        if not 0.0 <= self.hnr_db <= 40.0:
            raise InvalidSpec(f"HNR {self.hnr_db} dB outside [0, 40]")
        if self.severity not in SEVERITIES:
            raise InvalidSpec(f"severity {self.severity!r}")
        if not self.intervals:
            raise InvalidSpec("empty interval plan")


@dataclass(frozen=True)
class SynthResult:
    clip: AudioClip
    tier: AnnotationTier
    canonical: tuple
    decoded: tuple
    true_periods: np.ndarray
    true_amplitudes: np.ndarray


def _resonator_coeffs(freq, bandwidth, sr):
    r = np.exp(-np.pi * bandwidth / sr)
    theta = 2.0 * np.pi * freq / sr
    a = [1.0, -2.0 * r * np.cos(theta), r * r]
    gain = (1 - r) * np.sqrt(1 - 2 * r * np.cos(2 * theta) + r * r)
    return [gain], a


def _perturbed_series(n, target_pct, rng, quantize=None):
    """Multiplicative perturbation factors (1 + s*eps) rescaled so the
    realized local perturbation of the series hits target_pct."""
    eps = rng.uniform(-1.0, 1.0, n)
    if target_pct == 0 or n < 2:
        return np.ones(n)
    scale = 1.5 * target_pct / 100.0
    best = (np.inf, scale)
    for _ in range(30):
        series = 1.0 + scale * eps
        probe = quantize(series) if quantize else series
        realized = jitter_local(probe)
        if realized <= 1e-12:
            scale *= 2.0
            continue
        err = abs(realized - target_pct)
        if err < best[0]:
            best = (err, scale)
        if err < 0.005:
            break
        scale *= target_pct / realized
    return 1.0 + best[1] * eps


def _vowel_formants(label, shrink):
    f1, f2 = VOWEL_FORMANTS.get(label, (500.0, 1500.0))
    c1, c2 = 500.0, 1400.0
    return c1 + (1 - shrink) * (f1 - c1), c2 + (1 - shrink) * (f2 - c2)


def synthesize(spec, profile):
    """Render a SynthSpec to audio + annotation + phoneme sequences.

    Vowel intervals carry the pulse-train source (pulse times quantized to
    the sample grid; the quantized periods are the exported ground truth),
    consonants are low-level noise bursts, silences are exact zeros.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sr = spec.sample_rate
    total = sum(d for _, d in spec.intervals)
    n_samples = int(round(total * sr))
    buf = np.zeros(n_samples)

    # annotation tier straight from the plan
    tier_intervals = []
    cursor = 0.0
    for label, dur in spec.intervals:
        tier_intervals.append(Interval(round(cursor, 6), round(cursor + dur, 6), label))
        cursor += dur
    tier = AnnotationTier(intervals=tuple(tier_intervals))

    # voiced runs: consecutive vowel-class intervals
    runs = []
    run = None
    t = 0.0
    for label, dur in spec.intervals:
        cls = profile.classify(label)
        if cls == "vowel":
            if run is None:
                run = [t, t + dur, [(label, t, t + dur)]]
            else:
                run[1] = t + dur
                run[2].append((label, t, t + dur))
        else:
            if run is not None:
                runs.append(run)
                run = None
        t += dur
    if run is not None:
        runs.append(run)

    T0 = 1.0 / spec.f0
    all_periods = []
    all_amplitudes = []
    voiced_mask = np.zeros(n_samples, dtype=bool)
    for r_start, r_end, vowels in runs:
        n_pulses = max(2, int(np.floor((r_end - r_start) / T0)))

        def quantize(factors, start=r_start):
            times = start + T0 / 2 + np.concatenate(([0.0], np.cumsum(T0 * factors[:-1])))
            return np.diff(np.round(times * sr) / sr)

        factors = _perturbed_series(n_pulses, spec.jitter_pct, rng, quantize=quantize)
        times = r_start + T0 / 2 + np.concatenate(([0.0], np.cumsum(T0 * factors[:-1])))
        samples_idx = np.round(times * sr).astype(int)
        keep = (samples_idx < int(round(r_end * sr))) & (samples_idx < n_samples)
        samples_idx = samples_idx[keep]
        if len(samples_idx) < 2:
            continue
        amps = _perturbed_series(len(samples_idx), spec.shimmer_pct, rng)
        all_periods.append(np.diff(samples_idx) / sr)
        all_amplitudes.append(amps)

        # filter the run's impulse train per vowel interval
        run_a = int(round(r_start * sr))
        run_b = min(n_samples, int(round(r_end * sr)))
        voiced_mask[run_a:run_b] = True
        impulses = np.zeros(run_b - run_a)
        impulses[samples_idx - run_a] = amps
        for label, v_start, v_end in vowels:
            a = int(round(v_start * sr)) - run_a
            b = min(run_b - run_a, int(round(v_end * sr)) - run_a)
            seg = impulses[a:b]
            f1, f2 = _vowel_formants(label, spec.formant_shrink)
            out = seg
            for freq, bw in zip((f1, f2), RESONANCE_BANDWIDTHS):
                num, den = _resonator_coeffs(freq, bw, sr)
                out = lfilter(num, den, out)
            buf[run_a + a:run_a + b] += out

    # consonants: weak noise bursts
    t = 0.0
    for label, dur in spec.intervals:
        if profile.classify(label) == "consonant":
            a, b = int(round(t * sr)), min(n_samples, int(round((t + dur) * sr)))
            buf[a:b] = 0.05 * rng.standard_normal(b - a)
        t += dur

    # scale so voiced peaks sit near 0.5, then add noise to reach the target HNR
    peak = np.max(np.abs(buf)) if np.any(buf) else 1.0
    buf *= 0.5 / peak
    if np.any(voiced_mask):
        p_signal = np.mean(buf[voiced_mask] ** 2)
        p_noise = p_signal / 10.0 ** (spec.hnr_db / 10.0)
        noise = rng.standard_normal(int(voiced_mask.sum())) * np.sqrt(p_noise)
        buf[voiced_mask] += noise

    clip = AudioClip(samples=np.clip(buf, -1.0, 1.0), sample_rate=sr)
    canonical = tuple(
        label for label, _ in spec.intervals if not profile.is_silence(label)
    )
    decoded = decode_with_errors(canonical, ERROR_RATES[spec.severity], rng, profile)
    return SynthResult(
        clip=clip,
        tier=tier,
        canonical=canonical,
        decoded=decoded,
        true_periods=np.concatenate(all_periods) if all_periods else np.array([]),
        true_amplitudes=np.concatenate(all_amplitudes) if all_amplitudes else np.array([]),
    )


def decode_with_errors(canonical, rate, rng, profile):
    """Fixture decoder: identity plus seeded substitution/deletion/insertion.

    Vowels degrade a little faster than consonants so the consonant, vowel,
    and overall correctness scores each carry distinct information.
    """
    inventory = sorted(profile.phoneme_labels)
    vowel_rate = min(0.95, rate * 1.15 * rng.uniform(0.85, 1.15))
    cons_rate = min(0.95, rate * 0.90 * rng.uniform(0.85, 1.15))
    out = []
    for sym in canonical:
        cls = profile.classify(sym)
        sym_rate = vowel_rate if cls == "vowel" else cons_rate
        if rng.random() >= sym_rate:
            out.append(sym)
            continue
        op = rng.choice(("sub", "del", "ins"), p=(0.6, 0.2, 0.2))
        if op == "sub":
            others = [s for s in inventory if s != sym]
            out.append(others[rng.integers(len(others))])
        elif op == "ins":
            out.append(sym)
            out.append(inventory[rng.integers(len(inventory))])
        # del: drop the symbol
    return tuple(out)


# --------------------------------------------------------------------------
# corpus generation
# --------------------------------------------------------------------------

SEVERITY_PROFILES = {
    #            jitter%  hnr_dB  dur_scale  pause_s  shrink
    "healthy": (0.5, 25.0, 1.00, 0.00, 0.00),
    "mild": (1.0, 20.0, 1.15, 0.30, 0.15),
    "moderate": (2.0, 15.0, 1.35, 0.65, 0.35),
    "severe": (4.0, 10.0, 1.60, 1.10, 0.55),
}

_SYLLABLES = (
    ("S", "IY"), ("T", "AA"), ("K", "UW"), ("N", "AE"), ("M", "EH"),
    ("L", "IH"), ("D", "AO"), ("B", "AH"), ("P", "UH"), ("G", "ER"),
)


def utterance_plan(severity, rng, with_ae=True):
    """Interval plan for one utterance: CV syllables with all corner vowels,
    severity-scaled durations, and a severity-scaled mid-utterance pause."""
    jit, hnr, dur_scale, pause, _ = SEVERITY_PROFILES[severity]
    # per-utterance wobble keeps the severity trend monotone on average while
    # leaving room for the pronunciation scores to matter to the classifier
    dur_scale = dur_scale * (0.90 + 0.20 * rng.random())
    syllables = [("S", "IY"), ("T", "AA"), ("K", "UW")]
    if with_ae:
        syllables.append(("N", "AE"))
    extra = rng.integers(6, 10)
    picks = rng.integers(0, len(_SYLLABLES), extra)
    syllables += [_SYLLABLES[i] for i in picks]
    order = rng.permutation(len(syllables))
    plan = [("sil", 0.08)]
    half = len(syllables) // 2
    for pos, k in enumerate(order):
        c, v = syllables[k]
        plan.append((c, round(dur_scale * (0.06 + 0.02 * rng.random()), 4)))
        plan.append((v, round(dur_scale * (0.13 + 0.04 * rng.random()), 4)))
        if pos == half and pause > 0:
            plan.append(("sil", round(pause * (0.7 + 0.6 * rng.random()), 4)))
    plan.append(("sil", 0.08))
    return tuple(plan)


def make_spec(severity, seed, f0=None, with_ae=True):
    rng = np.random.default_rng(seed)
    jit, hnr, dur_scale, pause, shrink = SEVERITY_PROFILES[severity]
    if f0 is None:
        f0 = float(rng.choice((100.0, 114.0, 125.0, 133.0, 145.0, 160.0)))
    return SynthSpec(
        f0=f0,
        jitter_pct=jit,
        shimmer_pct=min(3.0 * jit, 15.0),
        hnr_db=float(np.clip(hnr + rng.uniform(-2.5, 2.5), 0.0, 40.0)),
        intervals=utterance_plan(severity, rng, with_ae=with_ae),
        severity=severity,
        seed=seed + 1,
        formant_shrink=shrink,
    )


def generate_corpus(out_dir, n_speakers, utts_per_speaker, seed, profile):
    """Write a complete synthetic corpus: WAVs, tiers, and a JSON-lines manifest.

    Speakers cycle through the four severities. Returns the manifest path.
    """
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    (out_dir / "tier").mkdir(parents=True, exist_ok=True)
    lines = []
    for s in range(n_speakers):
        speaker_id = f"spk{s:02d}"
        severity = SEVERITIES[s % len(SEVERITIES)]
        spk_rng = np.random.default_rng(seed * 1000 + s)
        f0 = float(spk_rng.choice((100.0, 114.0, 125.0, 133.0, 145.0, 160.0)))
        for u in range(utts_per_speaker):
            utt_id = f"{speaker_id}_u{u:02d}"
            spec = make_spec(
                severity, seed * 100000 + s * 100 + u, f0=f0, with_ae=(u % 2 == 0)
            )
            result = synthesize(spec, profile)
            wav_path = out_dir / "wav" / f"{utt_id}.wav"
            tier_path = out_dir / "tier" / f"{utt_id}.txt"
            write_wav(wav_path, result.clip)
            tier_path.write_text(
                "".join(f"{iv.start:.6f} {iv.end:.6f} {iv.label}\n" for iv in result.tier),
                encoding="utf-8",
            )
            lines.append(
                json.dumps(
                    {
                        "utt_id": utt_id,
                        "speaker_id": speaker_id,
                        "severity": severity,
                        "audio": str(wav_path.relative_to(out_dir)),
                        "annotation": str(tier_path.relative_to(out_dir)),
                        "canonical": " ".join(result.canonical),
                        "decoded": " ".join(result.decoded),
                    },
                    sort_keys=True,
                )
            )
    manifest = out_dir / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def harmonic_tone(duration, f0, sr=SAMPLE_RATE, n_harmonics=8, amplitude=0.3):
    """Equal-amplitude harmonic complex; handy HNR/pitch test signal."""
    t = np.arange(int(round(duration * sr))) / sr
    sig = np.zeros_like(t)
    for k in range(1, n_harmonics + 1):
        sig += np.cos(2 * np.pi * k * f0 * t)
    return AudioClip(samples=amplitude * sig / n_harmonics, sample_rate=sr)
