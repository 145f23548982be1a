"""CER, cpCER, saCER and their deltas over speaker-attributed transcripts.

cpCER concatenates each speaker's text, then searches the speaker-label
permutation minimizing total edit distance (optimal assignment).  saCER
aligns by speaker name directly, with no permutation search.  Both divide
by the total normalized reference length, so Δcp = cpCER - CER and
Δsa = saCER - CER isolate attribution error from transcription error.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .textdist import EditCounts, NormalizationPolicy, edit_distance, normalize
from .transcript import SATranscript, ScoreReport

# speaker label -> normalized per-speaker concatenation (temporal order)
SpeakerConcat = dict[str, str]

AGGREGATE_CLIP_ID = "AGGREGATE"


@dataclass(frozen=True)
class AssignmentResult:
    """Optimal reference->hypothesis speaker assignment and its cost.

    From solve_assignment the mapping keys/values are row/column indices
    of the cost matrix; from cp_cer they are speaker names, with None
    standing for the empty-text virtual speaker that pads a speaker-count
    mismatch.  Each hypothesis speaker is used at most once and
    total_cost is the sum of pairwise edit distances under the completed
    assignment.
    """

    mapping: dict
    total_cost: int


def concat_by_speaker(t: SATranscript, policy: NormalizationPolicy) -> SpeakerConcat:
    """Per-speaker normalized concatenation in canonical utterance order."""
    out: dict[str, list[str]] = {}
    for u in t.utterances:
        out.setdefault(u.speaker, []).append(normalize(u.text, policy))
    return {speaker: "".join(parts) for speaker, parts in out.items()}


def concat_all(t: SATranscript, policy: NormalizationPolicy) -> str:
    """All utterance texts concatenated in canonical temporal order."""
    return "".join(normalize(u.text, policy) for u in t.utterances)


def compute_cer(
    ref: SATranscript, hyp: SATranscript, policy: NormalizationPolicy
) -> tuple[float, EditCounts]:
    """Speaker-blind CER over globally concatenated texts."""
    ref_text = concat_all(ref, policy)
    if not ref_text:
        raise ValueError("undefined rate: empty reference text")
    counts = edit_distance(ref_text, concat_all(hyp, policy))
    return counts.distance() / counts.reference_length, counts


def assignment_costs(refc: SpeakerConcat, hypc: SpeakerConcat) -> np.ndarray:
    """Square edit-distance cost matrix between speaker concatenations.

    Rows are reference speakers in sorted label order, columns hypothesis
    speakers in sorted label order; the smaller side is padded with
    empty-text virtual speakers so a count mismatch is charged as pure
    insertions/deletions.
    """
    ref_texts = [refc[k] for k in sorted(refc)]
    hyp_texts = [hypc[k] for k in sorted(hypc)]
    n = max(len(ref_texts), len(hyp_texts))
    ref_texts += [""] * (n - len(ref_texts))
    hyp_texts += [""] * (n - len(hyp_texts))
    costs = np.zeros((n, n), dtype=np.int64)
    for i, r in enumerate(ref_texts):
        for j, h in enumerate(hyp_texts):
            costs[i, j] = edit_distance(r, h).distance()
    return costs


def solve_assignment(cost: np.ndarray) -> AssignmentResult:
    """Minimum-cost assignment on a square cost matrix.

    Solved with an O(n^3) linear-assignment solver
    (scipy.optimize.linear_sum_assignment); total_cost is the global
    minimum, exact for integer costs.
    """
    cost = np.asarray(cost)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError("cost matrix must be square")
    if cost.size:
        if not np.all(np.isfinite(cost)):
            raise ValueError("cost matrix entries must be finite")
        if np.any(cost < 0):
            raise ValueError("cost matrix entries must be non-negative")
    rows, cols = linear_sum_assignment(cost)
    mapping = {int(r): int(c) for r, c in zip(rows, cols)}
    total = int(cost[rows, cols].sum()) if cost.size else 0
    return AssignmentResult(mapping=mapping, total_cost=total)


def cp_cer(
    ref: SATranscript, hyp: SATranscript, policy: NormalizationPolicy
) -> tuple[float, AssignmentResult]:
    """Concatenated minimum-permutation CER.

    Returns the rate together with the optimal name-level assignment
    (None values mark reference speakers matched to a padding column,
    i.e. entirely deleted).
    """
    refc = concat_by_speaker(ref, policy)
    hypc = concat_by_speaker(hyp, policy)
    ref_len = sum(len(v) for v in refc.values())
    if ref_len == 0:
        raise ValueError("undefined rate: empty reference text")

    costs = assignment_costs(refc, hypc)
    solved = solve_assignment(costs)
    ref_names = sorted(refc)
    hyp_names = sorted(hypc)
    mapping: dict[str, str | None] = {}
    for r, c in solved.mapping.items():
        if r < len(ref_names):
            mapping[ref_names[r]] = hyp_names[c] if c < len(hyp_names) else None
    result = AssignmentResult(mapping=mapping, total_cost=solved.total_cost)
    return solved.total_cost / ref_len, result


def cp_cer_counts(
    ref: SATranscript, hyp: SATranscript, policy: NormalizationPolicy
) -> tuple[float, AssignmentResult, EditCounts]:
    """cp_cer plus the summed edit counts under the optimal assignment."""
    rate, result = cp_cer(ref, hyp, policy)
    refc = concat_by_speaker(ref, policy)
    hypc = concat_by_speaker(hyp, policy)
    counts = EditCounts(0, 0, 0, 0)
    matched_hyp = set()
    for ref_name, hyp_name in result.mapping.items():
        hyp_text = hypc[hyp_name] if hyp_name is not None else ""
        counts = counts + edit_distance(refc[ref_name], hyp_text)
        if hyp_name is not None:
            matched_hyp.add(hyp_name)
    for hyp_name in sorted(set(hypc) - matched_hyp):
        counts = counts + edit_distance("", hypc[hyp_name])
    return rate, result, counts


def sa_cer(
    ref: SATranscript, hyp: SATranscript, policy: NormalizationPolicy
) -> tuple[float, EditCounts]:
    """Speaker-attributed CER: alignment by speaker name, no permutation.

    Names are compared after Unicode NFC normalization.  A name present
    on only one side contributes its full concatenation length as
    deletions (reference side) or insertions (hypothesis side).
    """
    ref_named = _nfc_concat(ref, policy)
    hyp_named = _nfc_concat(hyp, policy)
    ref_len = sum(len(v) for v in ref_named.values())
    if ref_len == 0:
        raise ValueError("undefined rate: empty reference text")
    counts = EditCounts(0, 0, 0, 0)
    for name in sorted(set(ref_named) | set(hyp_named)):
        counts = counts + edit_distance(ref_named.get(name, ""), hyp_named.get(name, ""))
    return counts.distance() / ref_len, counts


def _nfc_concat(t: SATranscript, policy: NormalizationPolicy) -> SpeakerConcat:
    out: dict[str, list[str]] = {}
    for u in t.utterances:
        key = unicodedata.normalize("NFC", u.speaker)
        out.setdefault(key, []).append(normalize(u.text, policy))
    return {name: "".join(parts) for name, parts in out.items()}


def delta_cp(cer: float, cpcer: float) -> float:
    """cpCER - CER; may be negative and is reported signed."""
    return cpcer - cer


def delta_sa(cer: float, sacer: float) -> float:
    """saCER - CER; may be negative and is reported signed."""
    return sacer - cer


def score_pair(
    ref: SATranscript,
    hyp: SATranscript,
    policy: NormalizationPolicy,
    with_sacer: bool = True,
) -> ScoreReport:
    """Score one reference/hypothesis pair into a ScoreReport."""
    cer_rate, cer_counts = compute_cer(ref, hyp, policy)
    cp_rate, _, cp_counts = cp_cer_counts(ref, hyp, policy)
    counts = {"cer": cer_counts, "cpcer": cp_counts}
    sa_rate = None
    if with_sacer:
        sa_rate, sa_counts = sa_cer(ref, hyp, policy)
        counts["sacer"] = sa_counts
    return ScoreReport(
        clip_id=ref.clip_id,
        cer=cer_rate,
        cpcer=cp_rate,
        sacer=sa_rate,
        delta_cp=delta_cp(cer_rate, cp_rate),
        delta_sa=None if sa_rate is None else delta_sa(cer_rate, sa_rate),
        edit_counts=counts,
    )


def aggregate(reports: list[ScoreReport]) -> ScoreReport:
    """Micro-average: pool edit counts across clips, recompute rates.

    Rates are recomputed from the pooled counts (not averaged over
    clips), and deltas from the pooled rates.  All clips must report the
    same metric set.  Folding order is fixed by sorting on clip_id, so
    the result does not depend on completion order.
    """
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    reports = sorted(reports, key=lambda r: r.clip_id)

    available = {name for name, counts in _metric_counts(reports[0])}
    for r in reports[1:]:
        if {name for name, _ in _metric_counts(r)} != available:
            raise ValueError("mixed metric availability across clips")

    pooled: dict[str, EditCounts] = {}
    for r in reports:
        for name, counts in _metric_counts(r):
            pooled[name] = pooled[name] + counts if name in pooled else counts

    def rate(name: str) -> float | None:
        counts = pooled.get(name)
        if counts is None:
            return None
        return counts.distance() / counts.reference_length

    cer_rate = rate("cer")
    cp_rate = rate("cpcer")
    sa_rate = rate("sacer")
    return ScoreReport(
        clip_id=AGGREGATE_CLIP_ID,
        cer=cer_rate,
        cpcer=cp_rate,
        sacer=sa_rate,
        delta_cp=None if cp_rate is None else delta_cp(cer_rate, cp_rate),
        delta_sa=None if sa_rate is None else delta_sa(cer_rate, sa_rate),
        edit_counts=pooled,
    )


def _metric_counts(r: ScoreReport) -> list[tuple[str, EditCounts]]:
    out = []
    for name, value in (("cer", r.cer), ("cpcer", r.cpcer), ("sacer", r.sacer)):
        if value is not None:
            if name not in r.edit_counts:
                raise ValueError(f"report {r.clip_id!r} lacks edit counts for {name}")
            out.append((name, r.edit_counts[name]))
    return out
