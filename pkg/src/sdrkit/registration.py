"""Speaker profiles and registration-scenario generation.

Three supervision modes are supported: no registration (the model sees
no speaker priors), matched registration (exactly the ground-truth
speakers are registered) and over-registration (the ground-truth
speakers plus 1-50 distractors).  Registered speakers are always listed
in a uniformly random order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MIN_ENROLL_SECONDS = 2.0
MAX_ENROLL_SECONDS = 10.0
DEFAULT_N_OV_RANGE = (1, 50)


class RegistMode(str, Enum):
    NO_REGIST = "no-regist"
    MATCH_REGIST = "match-regist"
    OVER_REGIST = "over-regist"


@dataclass(frozen=True)
class SpeakerProfile:
    """A registered speaker: display name plus one averaged embedding."""

    name: str
    embedding: tuple[float, ...]
    source_clip_count: int = 1

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("profile name must be non-empty")
        if len(self.embedding) == 0:
            raise ValueError("embedding must be non-empty")
        if self.source_clip_count < 1:
            raise ValueError("source_clip_count must be >= 1")


@dataclass(frozen=True)
class RegistrationScenario:
    """A registration mode plus the ordered profile list it registers."""

    mode: RegistMode
    profiles: tuple[SpeakerProfile, ...]
    n_gt: int
    n_ov: int

    @property
    def n_rg(self) -> int:
        return len(self.profiles)


class ScenarioVerdict(NamedTuple):
    ok: bool
    clause: str | None


def segment_enrollment(
    total_duration: float, rng: np.random.Generator
) -> list[tuple[float, float]]:
    """Cut enrollment audio into 2-10 s spans for embedding extraction.

    Spans are drawn greedily from time 0; each length is uniform in
    [2, 10] s, and a final remainder shorter than 2 s is merged into the
    preceding span (so the last span may reach just under 12 s).
    """
    if total_duration < MIN_ENROLL_SECONDS:
        raise ValueError(f"enrollment audio must be >= {MIN_ENROLL_SECONDS} s")
    spans: list[tuple[float, float]] = []
    cursor = 0.0
    while total_duration - cursor >= MIN_ENROLL_SECONDS:
        length = float(rng.uniform(MIN_ENROLL_SECONDS, MAX_ENROLL_SECONDS))
        end = min(cursor + length, total_duration)
        spans.append((cursor, end))
        cursor = end
    if cursor < total_duration:
        start, _ = spans[-1]
        spans[-1] = (start, total_duration)
    return spans


def average_embeddings(vectors: Sequence[Sequence[float]]) -> np.ndarray:
    """Component-wise arithmetic mean of clip embeddings."""
    if len(vectors) == 0:
        raise ValueError("cannot average an empty embedding list")
    arr = [np.asarray(v, dtype=np.float64) for v in vectors]
    dim = arr[0].shape
    if any(a.shape != dim for a in arr):
        raise ValueError("embedding dimension mismatch")
    return np.mean(np.stack(arr), axis=0)


def build_profile(name: str, clip_embeddings: Sequence[Sequence[float]]) -> SpeakerProfile:
    """Average per-clip embeddings into one representative profile."""
    mean = average_embeddings(clip_embeddings)
    return SpeakerProfile(
        name=name,
        embedding=tuple(float(x) for x in mean),
        source_clip_count=len(clip_embeddings),
    )


def build_scenario(
    gt_speakers: Iterable[str],
    pool: Sequence[SpeakerProfile],
    mode: RegistMode,
    rng: np.random.Generator,
    n_ov_range: tuple[int, int] = DEFAULT_N_OV_RANGE,
) -> RegistrationScenario:
    """Generate one registration scenario for a clip.

    MatchRegist registers exactly the ground-truth profiles; OverRegist
    adds n_ov distractors sampled uniformly without replacement from the
    pool (n_ov uniform over [1, min(50, available)]).  The registered
    order is a uniform shuffle.  Candidate lists are sorted by name
    before any random draw, so the scenario is a pure function of
    (inputs, seed) regardless of set iteration order.
    """
    gt = sorted(set(gt_speakers))
    by_name: dict[str, SpeakerProfile] = {}
    for p in pool:
        if p.name in by_name:
            raise ValueError(f"duplicate profile name in pool: {p.name!r}")
        by_name[p.name] = p

    if mode == RegistMode.NO_REGIST:
        return RegistrationScenario(mode=mode, profiles=(), n_gt=len(gt), n_ov=0)

    missing = [name for name in gt if name not in by_name]
    if missing:
        raise ValueError(f"ground-truth speakers missing from pool: {missing}")
    ordered = [by_name[name] for name in gt]

    n_ov = 0
    if mode == RegistMode.OVER_REGIST:
        candidates = sorted(set(by_name) - set(gt))
        if not candidates:
            raise ValueError("insufficient distractors for over-registration")
        low, high = n_ov_range
        high = min(high, len(candidates))
        n_ov = int(rng.integers(low, high + 1))
        picks = rng.choice(len(candidates), size=n_ov, replace=False)
        ordered += [by_name[candidates[int(i)]] for i in picks]

    order = rng.permutation(len(ordered))
    profiles = tuple(ordered[int(i)] for i in order)
    return RegistrationScenario(mode=mode, profiles=profiles, n_gt=len(gt), n_ov=n_ov)


def verify_scenario(
    s: RegistrationScenario, gt_speakers: Iterable[str]
) -> ScenarioVerdict:
    """Check the mode-specific scenario invariants against ground truth.

    Returns a verdict carrying the first violated clause, or a pass.
    """
    gt = set(gt_speakers)
    names = [p.name for p in s.profiles]
    if len(set(names)) != len(names):
        return ScenarioVerdict(False, "distinct profile names")
    if s.n_gt != len(gt):
        return ScenarioVerdict(False, "n_gt matches ground truth count")

    if s.mode == RegistMode.NO_REGIST:
        if s.profiles:
            return ScenarioVerdict(False, "profiles empty")
        if s.n_ov != 0:
            return ScenarioVerdict(False, "n_ov = 0")
    elif s.mode == RegistMode.MATCH_REGIST:
        if len(s.profiles) != s.n_gt:
            return ScenarioVerdict(False, "profile count equals n_gt")
        if s.n_ov != 0:
            return ScenarioVerdict(False, "n_ov = 0")
        if set(names) != gt:
            return ScenarioVerdict(False, "name set equality")
    elif s.mode == RegistMode.OVER_REGIST:
        if s.n_ov < 1:
            return ScenarioVerdict(False, "n_ov >= 1")
        if len(s.profiles) != s.n_gt + s.n_ov:
            return ScenarioVerdict(False, "profile count equals n_gt + n_ov")
        if not gt.issubset(set(names)):
            return ScenarioVerdict(False, "ground-truth subset containment")
    else:  # pragma: no cover
        return ScenarioVerdict(False, "known mode")
    return ScenarioVerdict(True, None)


def load_pool(source: str | Path | bytes) -> list[SpeakerProfile]:
    """Load a profile pool from JSONL {"name", "dim", "embedding"} records.

    Duplicate names are rejected, and all embeddings must share one
    dimension.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    profiles: list[SpeakerProfile] = []
    seen: set[str] = set()
    dim: int | None = None
    for idx, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {idx}: malformed JSON ({exc.msg})") from None
        for key in ("name", "dim", "embedding"):
            if key not in record:
                raise ValueError(f"line {idx}: missing required field '{key}'")
        name = str(record["name"])
        embedding = tuple(float(x) for x in record["embedding"])
        if int(record["dim"]) != len(embedding):
            raise ValueError(f"line {idx}: dim does not match embedding length")
        if dim is None:
            dim = len(embedding)
        elif len(embedding) != dim:
            raise ValueError(f"line {idx}: embedding dimension {len(embedding)} != {dim}")
        if name in seen:
            raise ValueError(f"line {idx}: duplicate profile name {name!r}")
        seen.add(name)
        count = int(record.get("source_clip_count", 1))
        profiles.append(SpeakerProfile(name=name, embedding=embedding, source_clip_count=count))
    return profiles


def save_pool(path: str | Path, profiles: Sequence[SpeakerProfile]) -> None:
    lines = []
    for p in profiles:
        lines.append(
            json.dumps(
                {
                    "name": p.name,
                    "dim": len(p.embedding),
                    "embedding": list(p.embedding),
                    "source_clip_count": p.source_clip_count,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def scenario_to_dict(s: RegistrationScenario) -> dict:
    return {
        "mode": s.mode.value,
        "n_gt": s.n_gt,
        "n_ov": s.n_ov,
        "order": [p.name for p in s.profiles],
    }


def scenario_from_dict(
    data: dict, pool: Sequence[SpeakerProfile]
) -> RegistrationScenario:
    """Rebuild a scenario from its JSON form, resolving names in a pool."""
    by_name = {p.name: p for p in pool}
    try:
        profiles = tuple(by_name[name] for name in data["order"])
    except KeyError as exc:
        raise ValueError(f"scenario references unknown profile {exc.args[0]!r}") from None
    return RegistrationScenario(
        mode=RegistMode(data["mode"]),
        profiles=profiles,
        n_gt=int(data["n_gt"]),
        n_ov=int(data["n_ov"]),
    )
