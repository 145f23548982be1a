from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from sdrkit import SATranscript, Utterance

HANZI = "你好早再见天气很耶今明月光床前疑是地上霜举头望低思故乡人山水火口大小中国学生工作高兴吃饭喝水走路开车"
LATIN = "abcdefghijklmnopqrstuvwxyz"


def random_text(rng: np.random.Generator, charset: str, low: int = 1, high: int = 20) -> str:
    length = int(rng.integers(low, high + 1))
    return "".join(charset[int(i)] for i in rng.integers(0, len(charset), size=length))


def random_transcript(
    rng: np.random.Generator,
    clip_id: str = "clip",
    n_speakers: int = 3,
    n_utterances: int = 8,
    charset: str = HANZI,
    speakers: list[str] | None = None,
) -> SATranscript:
    """Sequential, non-overlapping transcript with millisecond-grid times."""
    if speakers is None:
        speakers = [f"S{i}" for i in range(n_speakers)]
    utterances = []
    cursor_ms = 0
    for _ in range(n_utterances):
        speaker = speakers[int(rng.integers(len(speakers)))]
        text = random_text(rng, charset)
        dur_ms = int(rng.integers(500, 4000))
        utterances.append(
            Utterance(
                speaker=speaker,
                text=text,
                start=cursor_ms / 1000.0,
                end=(cursor_ms + dur_ms) / 1000.0,
            )
        )
        cursor_ms += dur_ms
    return SATranscript(clip_id=clip_id, utterances=tuple(utterances))
