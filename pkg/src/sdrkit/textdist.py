"""Text normalization and character-level edit distance.

This is the computational kernel beneath CER and its speaker-attributed
variants: text is normalized into a sequence of Unicode scalar values, and
hypothesis/reference sequences are compared with a Levenshtein alignment
that reports substitution/deletion/insertion counts deterministically.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np

# Full-width ASCII variants (U+FF01..U+FF5E) fold onto U+0021..U+007E;
# the ideographic space folds onto the plain space.
_WIDTH_FOLD = {cp: cp - 0xFEE0 for cp in range(0xFF01, 0xFF5F)}
_WIDTH_FOLD[0x3000] = 0x20

# cost stride for the (cost, -substitutions) lexicographic DP encoding;
# limits supported sequence length to < 2**20 units
_ENC = 1 << 20


@dataclass(frozen=True)
class NormalizationPolicy:
    """Switches applied to text before scoring, in fixed order.

    Order of application: unify_width, casefold, strip_punctuation,
    strip_whitespace.  The default keeps only whitespace stripping, the
    usual convention for Mandarin character error rates; punctuation and
    width handling stay configurable because conventions differ between
    toolchains.
    """

    strip_whitespace: bool = True
    strip_punctuation: bool = False
    unify_width: bool = False
    casefold: bool = False

    def to_dict(self) -> dict:
        return {
            "strip_whitespace": self.strip_whitespace,
            "strip_punctuation": self.strip_punctuation,
            "unify_width": self.unify_width,
            "casefold": self.casefold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormalizationPolicy":
        return cls(
            strip_whitespace=bool(data.get("strip_whitespace", True)),
            strip_punctuation=bool(data.get("strip_punctuation", False)),
            unify_width=bool(data.get("unify_width", False)),
            casefold=bool(data.get("casefold", False)),
        )


@dataclass(frozen=True)
class EditCounts:
    """Edit operation counts from one reference/hypothesis alignment."""

    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    def __post_init__(self) -> None:
        for name in ("substitutions", "deletions", "insertions", "reference_length"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.deletions > self.reference_length:
            raise ValueError("deletions cannot exceed reference_length")

    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.reference_length + other.reference_length,
        )

    def to_dict(self) -> dict:
        return {
            "subs": self.substitutions,
            "dels": self.deletions,
            "ins": self.insertions,
            "ref_len": self.reference_length,
        }


def normalize(text: str, policy: NormalizationPolicy) -> str:
    """Apply the policy's enabled steps and return the unit sequence.

    Units are Unicode scalar values (not grapheme clusters); combining
    marks therefore count as separate units.
    """
    if policy.unify_width:
        text = text.translate(_WIDTH_FOLD)
    if policy.casefold:
        text = text.casefold()
    if policy.strip_punctuation:
        text = "".join(c for c in text if not unicodedata.category(c).startswith("P"))
    if policy.strip_whitespace:
        text = "".join(c for c in text if not c.isspace())
    return text


def _codepoints(s: str) -> np.ndarray:
    if not s:
        return np.empty(0, dtype=np.int64)
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)


def edit_distance(ref: str, hyp: str) -> EditCounts:
    """Levenshtein-minimal edit counts between two unit sequences.

    Costs are unit for substitution, deletion and insertion.  Among
    cost-minimal alignments the decomposition prefers substitutions over
    deletion/insertion pairs (substitution count is maximized), which
    pins all three counts uniquely: the result is deterministic and
    symmetric (swapping the arguments swaps deletions and insertions and
    leaves substitutions unchanged).
    """
    n, m = len(ref), len(hyp)
    if n == 0:
        return EditCounts(0, 0, m, 0)
    if m == 0:
        return EditCounts(0, n, 0, n)
    if min(n, m) >= _ENC:
        raise ValueError("sequence too long for edit_distance")

    smax = min(n, m)
    hyp_cp = _codepoints(hyp)
    ref_cp = _codepoints(ref)

    # Row DP over values enc = cost * _ENC + (smax - subs): minimizing enc
    # minimizes cost first, then maximizes substitutions.  The in-row
    # insertion chain C[j] = min(C[j-1] + _ENC, mid[j]) is resolved with a
    # cumulative minimum after removing the per-column offset.
    offs = np.arange(m + 1, dtype=np.int64) * _ENC
    prev = offs + smax
    cur = np.empty(m + 1, dtype=np.int64)
    sub_step = _ENC - 1  # diagonal on mismatch: cost +1, subs +1
    for i in range(1, n + 1):
        diag = prev[:-1] + np.where(ref_cp[i - 1] == hyp_cp, 0, sub_step)
        up = prev[1:] + _ENC
        cur[0] = i * _ENC + smax
        np.minimum(diag, up, out=cur[1:])
        shifted = cur - offs
        np.minimum.accumulate(shifted, out=shifted)
        np.add(shifted, offs, out=cur)
        prev, cur = cur, prev

    enc = int(prev[m])
    dist = enc // _ENC
    subs = smax - (enc % _ENC)
    matches = (n + m - dist - subs) // 2
    dels = n - matches - subs
    ins = m - matches - subs
    return EditCounts(subs, dels, ins, n)


def cer(ref: str, hyp: str) -> float:
    """Character error rate: (S + D + I) / len(ref).  May exceed 1."""
    if len(ref) == 0:
        raise ValueError("undefined rate: empty reference")
    return edit_distance(ref, hyp).distance() / len(ref)
