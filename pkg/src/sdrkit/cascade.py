"""Final merge stage of a cascaded diarization + recognition pipeline.

Diarization segments (RTTM) and timestamped recognition tokens (CTM-like)
are combined into a speaker-attributed hypothesis transcript: every token
goes to the diarization segment it overlaps most, and runs of
consecutive same-speaker tokens merge into utterances.  The known
weaknesses of cascades (boundary errors propagate, overlapping speech is
attributed to a single segment) are reproduced here on purpose, not
fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .transcript import SATranscript, Utterance


@dataclass(frozen=True)
class DiarSegment:
    """One diarization row: a speaker-homogeneous region of a recording."""

    recording_id: str
    speaker: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError("segment end must be > start")


@dataclass(frozen=True)
class TimedToken:
    """One timestamped recognition unit (a character for Mandarin)."""

    text: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError("token end must be >= start")


def _lines(data: str | bytes | Iterable[str]) -> list[str]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if isinstance(data, str):
        return data.splitlines()
    return [line.rstrip("\n") for line in data]


def parse_rttm(data: str | bytes | Iterable[str]) -> list[DiarSegment]:
    """Parse RTTM SPEAKER rows into diarization segments.

    Field order follows the RTTM convention: type, recording, channel,
    onset, duration, then speaker in field 8 (1-based).  Comment lines
    (";;") and non-SPEAKER rows are skipped.
    """
    segments = []
    for idx, line in enumerate(_lines(data), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        fields = stripped.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) < 9:
            raise ValueError(f"line {idx}: SPEAKER row has {len(fields)} fields, expected >= 9")
        try:
            onset = float(fields[3])
            duration = float(fields[4])
        except ValueError:
            raise ValueError(f"line {idx}: malformed numeric field") from None
        if duration <= 0:
            raise ValueError(f"line {idx}: non-positive duration {duration}")
        if onset < 0:
            raise ValueError(f"line {idx}: negative onset {onset}")
        segments.append(
            DiarSegment(
                recording_id=fields[1],
                speaker=fields[7],
                start=onset,
                end=onset + duration,
            )
        )
    return segments


def write_rttm(segments: Sequence[DiarSegment]) -> str:
    lines = [
        "SPEAKER {} 1 {:.3f} {:.3f} <NA> <NA> {} <NA> <NA>".format(
            s.recording_id, s.start, s.end - s.start, s.speaker
        )
        for s in segments
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_ctm(data: str | bytes | Iterable[str]) -> dict[str, list[TimedToken]]:
    """Parse CTM-like token rows grouped by recording id.

    Columns: recording, channel, start, duration, text.  Tokens come back
    sorted by (start, end, text) within each recording.
    """
    grouped: dict[str, list[TimedToken]] = {}
    for idx, line in enumerate(_lines(data), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        fields = stripped.split()
        if len(fields) < 5:
            raise ValueError(f"line {idx}: token row has {len(fields)} fields, expected >= 5")
        try:
            start = float(fields[2])
            duration = float(fields[3])
        except ValueError:
            raise ValueError(f"line {idx}: malformed numeric field") from None
        if duration < 0:
            raise ValueError(f"line {idx}: negative duration {duration}")
        grouped.setdefault(fields[0], []).append(
            TimedToken(text=fields[4], start=start, end=start + duration)
        )
    for tokens in grouped.values():
        tokens.sort(key=lambda t: (t.start, t.end, t.text))
    return grouped


def write_ctm(recording_id: str, tokens: Sequence[TimedToken]) -> str:
    lines = [
        "{} 1 {:.3f} {:.3f} {}".format(recording_id, t.start, t.end - t.start, t.text)
        for t in tokens
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _seg_order(seg: DiarSegment) -> tuple:
    return (seg.start, seg.end, seg.speaker)


def assign_tokens(
    tokens: Sequence[TimedToken],
    segments: Sequence[DiarSegment],
    clip_id: str | None = None,
) -> SATranscript:
    """Merge tokens and diarization segments into a hypothesis transcript.

    Every token is attributed to the segment with maximal temporal
    overlap; ties break toward the earlier-starting segment.  A token
    overlapping nothing goes to the segment whose midpoint is nearest the
    token midpoint.  Consecutive same-speaker tokens merge into one
    utterance spanning their union, with texts joined without separators
    (character-level tokens assumed).
    """
    if tokens and not segments:
        raise ValueError("no diarization available")
    if clip_id is None:
        clip_id = segments[0].recording_id if segments else ""
    if segments:
        recordings = {s.recording_id for s in segments}
        if len(recordings) > 1:
            raise ValueError(f"segments span multiple recordings: {sorted(recordings)}")
    for a, b in zip(tokens, tokens[1:]):
        if b.start < a.start:
            raise ValueError("tokens must be sorted by start time")
    if not tokens:
        return SATranscript(clip_id=clip_id, utterances=())

    ordered = sorted(segments, key=_seg_order)

    def owner(token: TimedToken) -> DiarSegment:
        best = None
        best_overlap = 0.0
        for seg in ordered:
            overlap = min(token.end, seg.end) - max(token.start, seg.start)
            if overlap > best_overlap:
                best, best_overlap = seg, overlap
        if best is not None:
            return best
        mid = (token.start + token.end) / 2.0
        return min(ordered, key=lambda s: (abs((s.start + s.end) / 2.0 - mid),) + _seg_order(s))

    utterances: list[Utterance] = []
    run_speaker: str | None = None
    run_text: list[str] = []
    run_start = run_end = 0.0
    for token in tokens:
        speaker = owner(token).speaker
        if speaker == run_speaker:
            run_text.append(token.text)
            run_end = max(run_end, token.end)
        else:
            if run_speaker is not None:
                utterances.append(
                    Utterance(run_speaker, "".join(run_text), run_start, run_end)
                )
            run_speaker = speaker
            run_text = [token.text]
            run_start, run_end = token.start, token.end
    utterances.append(Utterance(run_speaker, "".join(run_text), run_start, run_end))

    return SATranscript(clip_id=clip_id, utterances=tuple(utterances))


def oracle_cascade(
    ref: SATranscript,
) -> tuple[list[DiarSegment], list[TimedToken]]:
    """Perfect cascade inputs for a reference transcript.

    Emits one diarization segment per utterance and character tokens
    evenly spaced inside each utterance span, so that assign_tokens
    reconstructs the reference up to the merging of adjacent same-speaker
    utterances.
    """
    segments = []
    tokens = []
    for u in ref.utterances:
        span = u.end - u.start
        if span <= 0:
            raise ValueError(f"zero-duration utterance at start={u.start}")
        segments.append(
            DiarSegment(recording_id=ref.clip_id, speaker=u.speaker, start=u.start, end=u.end)
        )
        n = len(u.text)
        for k, ch in enumerate(u.text):
            tokens.append(
                TimedToken(
                    text=ch,
                    start=u.start + span * k / n,
                    end=u.start + span * (k + 1) / n,
                )
            )
    tokens.sort(key=lambda t: (t.start, t.end, t.text))
    return segments, tokens


def shift_segments(segments: Sequence[DiarSegment], delta: float) -> list[DiarSegment]:
    """Shift all segment boundaries by delta seconds (length preserved)."""
    return [
        DiarSegment(
            recording_id=s.recording_id,
            speaker=s.speaker,
            start=max(0.0, s.start + delta),
            end=max(0.0, s.start + delta) + (s.end - s.start),
        )
        for s in segments
    ]
