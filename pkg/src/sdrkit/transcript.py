"""Speaker-attributed transcript data model and its JSONL on-disk format.

A transcript file is UTF-8 JSONL: the first line is a header record
``{"clip_id": str, "duration": float?}`` and every following line is one
utterance record ``{"speaker": str, "text": str, "start": float,
"end": float}``.  Times are seconds with up to 3 decimals.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .textdist import EditCounts

ANON_PREFIX = "spk "


def _has_control_chars(s: str) -> bool:
    return any(unicodedata.category(c) == "Cc" for c in s)


@dataclass(frozen=True)
class Utterance:
    """One speaker turn: who spoke, what, and when."""

    speaker: str
    text: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.speaker:
            raise ValueError("speaker label must be non-empty")
        if _has_control_chars(self.speaker):
            raise ValueError("speaker label must not contain control characters")
        if self.start < 0:
            raise ValueError("start must be non-negative")
        if self.end < self.start:
            raise ValueError("end must be >= start")

    def sort_key(self) -> tuple:
        return (self.start, self.end, self.speaker)


@dataclass(frozen=True)
class SATranscript:
    """Ordered speaker-attributed transcript for one audio clip.

    Utterances are kept canonically sorted by (start, end, speaker); the
    value is immutable after construction and safe to share across
    threads.
    """

    clip_id: str
    utterances: tuple[Utterance, ...] = ()
    duration: float | None = None

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.utterances, key=Utterance.sort_key))
        object.__setattr__(self, "utterances", ordered)
        if self.duration is not None and self.duration < 0:
            raise ValueError("duration must be non-negative")

    def speaker_set(self) -> set[str]:
        return {u.speaker for u in self.utterances}


@dataclass(frozen=True)
class ScoreReport:
    """Per-clip (or pooled) metric values with their edit-operation counts.

    Rates are fractions (0.1397, not 13.97%).  ``edit_counts`` maps metric
    name ("cer", "cpcer", "sacer") to the counts the rate was computed
    from.  Deltas are signed differences against CER and must match the
    stored rates exactly.
    """

    clip_id: str
    cer: float
    cpcer: float | None = None
    sacer: float | None = None
    delta_cp: float | None = None
    delta_sa: float | None = None
    edit_counts: dict[str, EditCounts] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.cpcer is not None and self.delta_cp is not None:
            if self.delta_cp != self.cpcer - self.cer:
                raise ValueError("delta_cp inconsistent with cpcer - cer")
        if self.sacer is not None and self.delta_sa is not None:
            if self.delta_sa != self.sacer - self.cer:
                raise ValueError("delta_sa inconsistent with sacer - cer")
        for name, rate in (("cer", self.cer), ("cpcer", self.cpcer), ("sacer", self.sacer)):
            counts = self.edit_counts.get(name)
            if rate is not None and counts is not None and counts.reference_length <= 0:
                raise ValueError(f"reference_length must be > 0 for reported {name}")


def parse_transcript(data: bytes | str) -> SATranscript:
    """Parse a JSONL transcript stream into a canonical SATranscript.

    Raises ValueError with a 1-based line number for malformed lines,
    missing required fields, or invariant violations (negative duration,
    end < start).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()
    if not lines or not lines[0].strip():
        raise ValueError("line 1: missing header record")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ValueError(f"line 1: malformed JSON ({exc.msg})") from None
    if not isinstance(header, dict) or "clip_id" not in header:
        raise ValueError("line 1: header must be an object with 'clip_id'")
    clip_id = header["clip_id"]
    if not isinstance(clip_id, str):
        raise ValueError("line 1: 'clip_id' must be a string")
    duration = header.get("duration")
    if duration is not None:
        duration = float(duration)
        if duration < 0:
            raise ValueError("line 1: negative duration")

    utterances = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {idx}: malformed JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise ValueError(f"line {idx}: record must be an object")
        for key in ("speaker", "text", "start", "end"):
            if key not in record:
                raise ValueError(f"line {idx}: missing required field '{key}'")
        try:
            utt = Utterance(
                speaker=str(record["speaker"]),
                text=str(record["text"]),
                start=float(record["start"]),
                end=float(record["end"]),
            )
        except (TypeError, ValueError) as exc:
            raise ValueError(f"line {idx}: {exc}") from None
        utterances.append(utt)

    return SATranscript(clip_id=clip_id, utterances=tuple(utterances), duration=duration)


def serialize_transcript(t: SATranscript) -> str:
    """Serialize to the JSONL format; inverse of parse_transcript.

    Times are written with at most 3 decimals, so the round trip is exact
    for transcripts whose times sit on the millisecond grid (everything
    this toolkit produces does).
    """
    header: dict = {"clip_id": t.clip_id}
    if t.duration is not None:
        header["duration"] = round(t.duration, 3)
    out = [json.dumps(header, ensure_ascii=False)]
    for u in t.utterances:
        out.append(
            json.dumps(
                {
                    "speaker": u.speaker,
                    "text": u.text,
                    "start": round(u.start, 3),
                    "end": round(u.end, 3),
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(out) + "\n"


def anonymize(t: SATranscript) -> SATranscript:
    """Replace speaker labels with "spk 0", "spk 1", ... by first appearance.

    Numbering follows first temporal appearance in the canonical utterance
    order; content, times and ordering are unchanged, and the relabeling
    is a bijection over the transcript's speaker set.
    """
    mapping: dict[str, str] = {}
    for u in t.utterances:
        if u.speaker not in mapping:
            mapping[u.speaker] = f"{ANON_PREFIX}{len(mapping)}"
    relabeled = tuple(
        Utterance(speaker=mapping[u.speaker], text=u.text, start=u.start, end=u.end)
        for u in t.utterances
    )
    return SATranscript(clip_id=t.clip_id, utterances=relabeled, duration=t.duration)


def load_transcript(path: str | Path) -> SATranscript:
    return parse_transcript(Path(path).read_bytes())


def save_transcript(path: str | Path, t: SATranscript) -> None:
    Path(path).write_text(serialize_transcript(t), encoding="utf-8", newline="\n")
