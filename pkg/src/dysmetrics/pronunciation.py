"""Phoneme-correctness scoring and vowel-distortion metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyCanonical,
    MissingAE,
    MissingCornerNoMean,
    NoFormantsFound,
    UnclassifiedSymbol,
)
from .signal import estimate_formants

GAP = "*"

CORNER_ROLES = ("i", "a", "u", "ae")


@dataclass(frozen=True)
class AlignmentResult:
    pairs: tuple  # (canonical symbol or GAP, decoded symbol or GAP)
    cost: int


def align_phoneme_sequences(canonical, decoded):
    """Minimum-edit-distance alignment of two phoneme sequences.

    Unit costs for substitution, insertion, and deletion. Ties are resolved
    left to right, preferring match > substitution > deletion > insertion,
    which makes the alignment deterministic.
    """
    canonical = tuple(canonical)
    decoded = tuple(decoded)
    if not canonical:
        raise EmptyCanonical("canonical sequence is empty")
    n, m = len(canonical), len(decoded)
    # dp[i][j] = edit distance between canonical[i:] and decoded[j:]
    dp = np.zeros((n + 1, m + 1), dtype=np.int64)
    dp[n, :] = np.arange(m, -1, -1)
    dp[:, m] = np.arange(n, -1, -1)
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            sub = dp[i + 1, j + 1] + (canonical[i] != decoded[j])
            dp[i, j] = min(sub, dp[i + 1, j] + 1, dp[i, j + 1] + 1)
    pairs = []
    i = j = 0
    while i < n or j < m:
        here = dp[i, j]
        if i < n and j < m and canonical[i] == decoded[j] and here == dp[i + 1, j + 1]:
            pairs.append((canonical[i], decoded[j]))
            i += 1
            j += 1
        elif i < n and j < m and here == dp[i + 1, j + 1] + 1:
            pairs.append((canonical[i], decoded[j]))
            i += 1
            j += 1
        elif i < n and here == dp[i + 1, j] + 1:
            pairs.append((canonical[i], GAP))
            i += 1
        else:
            pairs.append((GAP, decoded[j]))
            j += 1
    return AlignmentResult(pairs=tuple(pairs), cost=int(dp[0, 0]))


def format_alignment(alignment):
    """Two-row human-readable rendering of an alignment."""
    widths = [max(len(a), len(b)) for a, b in alignment.pairs]
    top = "  ".join(a.ljust(w) for (a, _), w in zip(alignment.pairs, widths))
    bot = "  ".join(b.ljust(w) for (_, b), w in zip(alignment.pairs, widths))
    return top + "\n" + bot


def phoneme_correctness(alignment, profile):
    """(PCC, PCV, PCP): % of target consonants/vowels/phonemes matched."""
    target_c = target_v = match_c = match_v = 0
    for can, dec in alignment.pairs:
        if can == GAP:
            continue
        cls = profile.classify(can)
        if cls == "vowel":
            target_v += 1
            match_v += can == dec
        elif cls == "consonant":
            target_c += 1
            match_c += can == dec
        elif cls == "silence":
            continue
        else:
            raise UnclassifiedSymbol(can)
    pcc = 100.0 * match_c / target_c if target_c else float("nan")
    pcv = 100.0 * match_v / target_v if target_v else float("nan")
    total = target_c + target_v
    pcp = 100.0 * (match_c + match_v) / total if total else float("nan")
    return pcc, pcv, pcp


@dataclass(frozen=True)
class CornerFormants:
    """F1/F2 per corner-vowel role, measured or speaker-mean-interpolated."""

    corners: dict  # role -> (f1, f2)
    sources: dict  # role -> "measured" | "interpolated"

    def has(self, role):
        return role in self.corners


def measure_corner_formants(tier, clip, profile):
    """Measured F1/F2 at the midpoint of the longest instance of each corner vowel.

    Corner vowels absent from the tier (or whose formant fit fails) are
    simply missing from the result.
    """
    corners = {}
    for role in CORNER_ROLES:
        symbol = profile.corner_vowels.get(role)
        if symbol is None:
            continue
        instances = [iv for iv in tier if iv.label == symbol]
        if not instances:
            continue
        longest = max(instances, key=lambda iv: iv.duration)
        try:
            slice_ = estimate_formants(clip, longest.midpoint)
        except NoFormantsFound:
            continue
        corners[role] = (slice_.f1, slice_.f2)
    return corners


def corner_vowel_formants(tier, clip, profile, speaker_means=None):
    """Corner formants for one utterance, interpolating missing corners.

    speaker_means maps role -> (f1, f2) averages for the utterance's
    speaker; it backs any corner vowel the tier does not contain.
    """
    measured = measure_corner_formants(tier, clip, profile)
    corners = {}
    sources = {}
    for role in CORNER_ROLES:
        if profile.corner_vowels.get(role) is None:
            continue
        if role in measured:
            corners[role] = measured[role]
            sources[role] = "measured"
        elif speaker_means and role in speaker_means:
            corners[role] = tuple(speaker_means[role])
            sources[role] = "interpolated"
        else:
            raise MissingCornerNoMean(role)
    return CornerFormants(corners=corners, sources=sources)


def _shoelace(points):
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def vowel_space_metrics(corners):
    """(tVSA, qVSA, FCR, VAI, F2-ratio) from corner-vowel formants.

    tVSA is the /i/-/a/-/u/ triangle area in the F1xF2 plane; qVSA adds
    the front low vowel and is NaN-free only when that corner exists.
    """
    for role in ("i", "a", "u"):
        if not corners.has(role):
            raise MissingCornerNoMean(role)
    f1 = {r: corners.corners[r][0] for r in corners.corners}
    f2 = {r: corners.corners[r][1] for r in corners.corners}
    tvsa = _shoelace([(f1["i"], f2["i"]), (f1["a"], f2["a"]), (f1["u"], f2["u"])])
    if corners.has("ae"):
        qvsa = _shoelace(
            [(f1["i"], f2["i"]), (f1["ae"], f2["ae"]), (f1["a"], f2["a"]), (f1["u"], f2["u"])]
        )
    else:
        qvsa = None
    fcr = (f2["u"] + f2["a"] + f1["i"] + f1["u"]) / (f2["i"] + f1["a"])
    vai = 1.0 / fcr
    f2_ratio = f2["i"] / f2["u"]
    return tvsa, qvsa, fcr, vai, f2_ratio


def quadrilateral_vsa(corners):
    """qVSA alone; raises when the front low corner vowel is unavailable."""
    if not corners.has("ae"):
        raise MissingAE("quadrilateral VSA needs the front low corner vowel")
    return vowel_space_metrics(corners)[1]
