"""Multi-speaker mixture simulation with aligned reference transcripts.

A mixture is built by concatenating utterances from 2-4 speakers into a
50 s segment (no deliberate overlap), optionally convolving each
speaker's audio with a room impulse response, then adding noise scaled
to an SNR drawn uniformly from [10, 20] dB.  Long recordings can also be
split into 40-50 s evaluation clips.  Everything is a pure function of
(inputs, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .audio import AudioClip, resample
from .transcript import SATranscript, Utterance

SAMPLE_RATE = 16000
CLIP_SECONDS = 50.0
CLIP_SAMPLES = int(round(CLIP_SECONDS * SAMPLE_RATE))
MIN_SPEAKERS = 2
MAX_SPEAKERS = 4
SNR_RANGE_DB = (10.0, 20.0)
SPLIT_RANGE_SECONDS = (40.0, 50.0)
NOISE_CROSSFADE_SAMPLES = 160  # 10 ms at 16 kHz

Resolver = Callable[[str], AudioClip]


@dataclass(frozen=True)
class SourceUtterance:
    """One corpus utterance: speaker, audio reference, text and duration."""

    speaker: str
    audio_ref: str
    text: str
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("utterance duration must be positive")


@dataclass(frozen=True)
class CorpusIndex:
    """Read-only source material for simulation."""

    speakers: dict[str, tuple[SourceUtterance, ...]]
    noises: tuple[str, ...] = ()
    rirs: tuple[str, ...] = ()


@dataclass(frozen=True)
class MixtureSpec:
    """Full provenance of one simulated clip; enough to regenerate it."""

    seed: int
    n_speakers: int
    snr_db: float
    source_utterances: tuple[SourceUtterance, ...]
    noise_ref: str | None = None
    rir_refs: Mapping[str, str] | None = None
    target_duration: float = CLIP_SECONDS

    def __post_init__(self) -> None:
        if not (MIN_SPEAKERS <= self.n_speakers <= MAX_SPEAKERS):
            raise ValueError(f"n_speakers must be in [{MIN_SPEAKERS}, {MAX_SPEAKERS}]")
        low, high = SNR_RANGE_DB
        if not (low <= self.snr_db <= high):
            raise ValueError(f"snr_db must be in [{low}, {high}]")
        names = {u.speaker for u in self.source_utterances}
        if len(names) != self.n_speakers:
            raise ValueError("source utterances must cover exactly n_speakers distinct speakers")


@dataclass(frozen=True)
class Turn:
    """One scheduled utterance placement inside a mixture."""

    speaker: str
    start: float
    end: float
    text: str
    audio_ref: str


def load_source_manifest(source: str | Path | bytes) -> dict[str, tuple[SourceUtterance, ...]]:
    """Load the source-corpus JSONL {"speaker", "wav", "text", "duration"}."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    grouped: dict[str, list[SourceUtterance]] = {}
    for idx, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {idx}: malformed JSON ({exc.msg})") from None
        for key in ("speaker", "wav", "text", "duration"):
            if key not in record:
                raise ValueError(f"line {idx}: missing required field '{key}'")
        utt = SourceUtterance(
            speaker=str(record["speaker"]),
            audio_ref=str(record["wav"]),
            text=str(record["text"]),
            duration=float(record["duration"]),
        )
        grouped.setdefault(utt.speaker, []).append(utt)
    return {speaker: tuple(utts) for speaker, utts in grouped.items()}


def load_path_manifest(source: str | Path | bytes) -> tuple[str, ...]:
    """Load a noise/RIR manifest: JSONL records carrying a "wav" path."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    refs = []
    for idx, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {idx}: malformed JSON ({exc.msg})") from None
        if "wav" not in record:
            raise ValueError(f"line {idx}: missing required field 'wav'")
        refs.append(str(record["wav"]))
    return tuple(refs)


def sample_mixture_spec(
    corpus: CorpusIndex,
    rng: int | np.random.Generator,
    seed: int | None = None,
) -> MixtureSpec:
    """Draw one mixture specification from the corpus.

    n_speakers is uniform over {2, 3, 4} and the SNR uniform over
    [10, 20] dB.  Utterances are drawn one per chosen speaker first (so
    every speaker appears), then from random speakers until the summed
    duration reaches the 50 s target.  Passing an integer uses it both to
    seed the generator and as the recorded spec seed.
    """
    if isinstance(rng, (int, np.integer)):
        seed = int(rng) if seed is None else seed
        rng = np.random.default_rng(int(rng))
    if seed is None:
        raise ValueError("a seed must be provided to record in the spec")

    names = sorted(corpus.speakers)
    if len(names) < MAX_SPEAKERS:
        raise ValueError(f"insufficient corpus: need >= {MAX_SPEAKERS} speakers, have {len(names)}")
    n_speakers = int(rng.integers(MIN_SPEAKERS, MAX_SPEAKERS + 1))
    snr_db = float(rng.uniform(*SNR_RANGE_DB))
    chosen = [names[int(i)] for i in rng.choice(len(names), size=n_speakers, replace=False)]

    pools = {name: list(corpus.speakers[name]) for name in chosen}
    for pool in pools.values():
        rng.shuffle(pool)

    drawn: list[SourceUtterance] = []
    total = 0.0
    for name in chosen:  # one utterance per speaker up front
        utt = pools[name].pop()
        drawn.append(utt)
        total += utt.duration
    while total < CLIP_SECONDS:
        withleft = [name for name in chosen if pools[name]]
        if not withleft:
            raise ValueError("insufficient corpus: ran out of utterances before 50 s")
        name = withleft[int(rng.integers(len(withleft)))]
        utt = pools[name].pop()
        drawn.append(utt)
        total += utt.duration

    noise_ref = None
    if corpus.noises:
        noise_ref = corpus.noises[int(rng.integers(len(corpus.noises)))]
    rir_refs = None
    if corpus.rirs:
        rir_refs = {
            name: corpus.rirs[int(rng.integers(len(corpus.rirs)))] for name in sorted(chosen)
        }

    return MixtureSpec(
        seed=int(seed),
        n_speakers=n_speakers,
        snr_db=snr_db,
        source_utterances=tuple(drawn),
        noise_ref=noise_ref,
        rir_refs=rir_refs,
    )


def schedule_turns(spec: MixtureSpec, rng: np.random.Generator) -> list[Turn]:
    """Place the spec's utterances sequentially with random interleaving.

    Turns are back-to-back from t=0 (no deliberate overlap).  The next
    speaker is chosen uniformly among speakers with remaining utterances,
    avoiding an immediate repeat whenever at least two speakers still
    have material.  Placement stops once the scheduled span reaches the
    target; the final turn may overhang it (the rendered clip is cut at
    the target exactly).  Boundaries live on the millisecond grid.
    """
    queues: dict[str, list[SourceUtterance]] = {}
    for utt in spec.source_utterances:
        queues.setdefault(utt.speaker, []).append(utt)
    order = sorted(queues)

    turns: list[Turn] = []
    cursor_ms = 0
    target_ms = int(round(spec.target_duration * 1000))
    prev: str | None = None
    while cursor_ms < target_ms:
        available = [name for name in order if queues[name]]
        if not available:
            break
        candidates = [name for name in available if name != prev] or available
        pick = candidates[int(rng.integers(len(candidates)))]
        utt = queues[pick].pop(0)
        dur_ms = max(1, int(round(utt.duration * 1000)))
        turns.append(
            Turn(
                speaker=pick,
                start=cursor_ms / 1000.0,
                end=(cursor_ms + dur_ms) / 1000.0,
                text=utt.text,
                audio_ref=utt.audio_ref,
            )
        )
        cursor_ms += dur_ms
        prev = pick
    return turns


def turns_to_transcript(
    turns: Sequence[Turn], clip_id: str, duration: float = CLIP_SECONDS
) -> SATranscript:
    """Reference transcript for a schedule, clipped at the target duration."""
    utterances = tuple(
        Utterance(speaker=t.speaker, text=t.text, start=t.start, end=min(t.end, duration))
        for t in turns
        if t.start < duration
    )
    return SATranscript(clip_id=clip_id, utterances=utterances, duration=duration)


def scale_noise_to_snr(signal: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Scale noise so that 10*log10(P_signal/P_noise) equals snr_db.

    Powers are mean squared amplitudes over the mixing span (the signal
    length).  The gain is sqrt(P_s / (P_n * 10^(snr/10))).
    """
    if signal.sample_rate != noise.sample_rate:
        raise ValueError("signal and noise sample rates differ")
    if len(noise.samples) < len(signal.samples):
        raise ValueError("noise shorter than signal; loop it first")
    span = len(signal.samples)
    p_signal = float(np.mean(signal.samples**2))
    p_noise = float(np.mean(noise.samples[:span] ** 2))
    if p_signal == 0.0:
        raise ValueError("silent signal: SNR undefined")
    if p_noise == 0.0:
        raise ValueError("silent noise: SNR undefined")
    gain = np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))
    return AudioClip(sample_rate=noise.sample_rate, samples=noise.samples[:span] * gain)


def _loop_noise(samples: np.ndarray, length: int) -> np.ndarray:
    """Tile noise to the requested length with 10 ms linear crossfades."""
    if len(samples) >= length:
        return samples[:length]
    fade = min(NOISE_CROSSFADE_SAMPLES, len(samples) // 2)
    if fade == 0:
        reps = int(np.ceil(length / len(samples)))
        return np.tile(samples, reps)[:length]
    ramp = np.linspace(0.0, 1.0, fade, endpoint=False)
    out = samples.copy()
    while len(out) < length:
        head = samples[:fade] * ramp
        tail = out[-fade:] * (1.0 - ramp)
        out = np.concatenate([out[:-fade], head + tail, samples[fade:]])
    return out[:length]


def synthesize_mixture(
    spec: MixtureSpec, resolver: Resolver, clip_id: str | None = None
) -> tuple[AudioClip, SATranscript]:
    """Render a mixture spec into audio plus its reference transcript.

    Speech is placed per the schedule (source audio trimmed or padded to
    the scheduled duration), each speaker optionally convolved with its
    RIR, noise looped/trimmed to the clip length and scaled to the target
    SNR against the summed speech, and the final waveform peak-normalized
    to 0.95 only if it would clip.  Silent noise is skipped (clean
    concatenation).  Output is bit-identical for a given (spec, resolver).
    """
    if clip_id is None:
        clip_id = f"sim-{spec.seed:x}"
    rng = np.random.default_rng(spec.seed)
    turns = schedule_turns(spec, rng)

    total_samples = int(round(spec.target_duration * SAMPLE_RATE))
    speech = np.zeros(total_samples, dtype=np.float64)
    rir_cache: dict[str, np.ndarray] = {}
    for turn in turns:
        clip = resolver(turn.audio_ref)
        clip = resample(clip, SAMPLE_RATE)
        if clip.sample_rate != SAMPLE_RATE:
            raise ValueError(f"sample-rate mismatch after resampling: {clip.sample_rate}")
        samples = clip.samples
        if spec.rir_refs and turn.speaker in spec.rir_refs:
            ref = spec.rir_refs[turn.speaker]
            if ref not in rir_cache:
                rir = resample(resolver(ref), SAMPLE_RATE)
                rir_cache[ref] = rir.samples
            samples = fftconvolve(samples, rir_cache[ref])
        start = int(round(turn.start * SAMPLE_RATE))
        length = int(round(turn.end * SAMPLE_RATE)) - start
        if len(samples) >= length:
            samples = samples[:length]
        else:
            samples = np.concatenate([samples, np.zeros(length - len(samples))])
        stop = min(start + length, total_samples)
        if start < total_samples:
            speech[start:stop] += samples[: stop - start]

    mix = speech
    if spec.noise_ref is not None:
        noise = resample(resolver(spec.noise_ref), SAMPLE_RATE)
        if float(np.max(np.abs(noise.samples), initial=0.0)) == 0.0:
            pass  # degenerate noise: clean concatenation
        else:
            looped = AudioClip(
                sample_rate=SAMPLE_RATE, samples=_loop_noise(noise.samples, total_samples)
            )
            scaled = scale_noise_to_snr(
                AudioClip(sample_rate=SAMPLE_RATE, samples=speech), looped, spec.snr_db
            )
            mix = speech + scaled.samples

    peak = float(np.max(np.abs(mix), initial=0.0))
    if peak > 1.0:
        mix = mix * (0.95 / peak)

    transcript = turns_to_transcript(turns, clip_id=clip_id, duration=spec.target_duration)
    return AudioClip(sample_rate=SAMPLE_RATE, samples=mix), transcript


def split_clips(
    recording_duration: float, rng: np.random.Generator
) -> list[tuple[float, float]]:
    """Split a long recording into consecutive 40-50 s evaluation spans.

    Span lengths are uniform in [40, 50] s; a final remainder shorter
    than 40 s is merged into the last span (which may then approach
    90 s).
    """
    low, high = SPLIT_RANGE_SECONDS
    if recording_duration < low:
        raise ValueError(f"recording must be >= {low} s")
    spans: list[tuple[float, float]] = []
    cursor = 0.0
    while recording_duration - cursor >= low:
        length = float(rng.uniform(low, high))
        end = min(cursor + length, recording_duration)
        spans.append((cursor, end))
        cursor = end
    if cursor < recording_duration:
        start, _ = spans[-1]
        spans[-1] = (start, recording_duration)
    return spans


def spec_to_dict(spec: MixtureSpec) -> dict:
    return {
        "seed": spec.seed,
        "n_speakers": spec.n_speakers,
        "target_duration": spec.target_duration,
        "snr_db": spec.snr_db,
        "noise_ref": spec.noise_ref,
        "rir_refs": dict(spec.rir_refs) if spec.rir_refs else None,
        "source_utterances": [
            {"speaker": u.speaker, "wav": u.audio_ref, "text": u.text, "duration": u.duration}
            for u in spec.source_utterances
        ],
    }


def spec_from_dict(data: dict) -> MixtureSpec:
    return MixtureSpec(
        seed=int(data["seed"]),
        n_speakers=int(data["n_speakers"]),
        snr_db=float(data["snr_db"]),
        source_utterances=tuple(
            SourceUtterance(
                speaker=str(u["speaker"]),
                audio_ref=str(u["wav"]),
                text=str(u["text"]),
                duration=float(u["duration"]),
            )
            for u in data["source_utterances"]
        ),
        noise_ref=data.get("noise_ref"),
        rir_refs=data.get("rir_refs"),
        target_duration=float(data.get("target_duration", CLIP_SECONDS)),
    )
