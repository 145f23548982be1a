from __future__ import annotations

import numpy as np
import pytest

from sdrkit import (
    EditCounts,
    NormalizationPolicy,
    SATranscript,
    ScoreReport,
    Utterance,
    aggregate,
    anonymize,
    assignment_costs,
    compute_cer,
    concat_all,
    concat_by_speaker,
    cp_cer,
    cp_cer_counts,
    delta_cp,
    delta_sa,
    sa_cer,
    score_pair,
    solve_assignment,
)

from conftest import random_transcript
from oracles import exhaustive_assignment

POLICY = NormalizationPolicy()


def make(utts, clip_id="clip"):
    return SATranscript(clip_id=clip_id, utterances=tuple(utts))


def two_speaker_pair():
    ref = make(
        [
            Utterance("Alice", "ab", 0, 1),
            Utterance("Bob", "cd", 1, 2),
        ]
    )
    hyp = make(
        [
            Utterance("Alice", "cd", 0, 1),
            Utterance("Bob", "ab", 1, 2),
        ]
    )
    return ref, hyp


class TestConcat:
    def test_concat_by_speaker_groups_in_temporal_order(self):
        t = make(
            [
                Utterance("A", "你好", 0, 1),
                Utterance("B", "早", 1, 2),
                Utterance("A", "再见", 2, 3),
            ]
        )
        assert concat_by_speaker(t, POLICY) == {"A": "你好再见", "B": "早"}

    def test_single_speaker_equals_concat_all(self):
        t = make([Utterance("A", "你好", 0, 1), Utterance("A", "早", 1, 2)])
        assert concat_by_speaker(t, POLICY)["A"] == concat_all(t, POLICY)

    def test_empty_transcript(self):
        t = make([])
        assert concat_by_speaker(t, POLICY) == {}
        assert concat_all(t, POLICY) == ""

    def test_concat_all_temporal_order(self):
        t = make([Utterance("A", "你好", 0, 1), Utterance("B", "早", 1, 2)])
        assert concat_all(t, POLICY) == "你好早"


class TestComputeCer:
    def test_identity(self):
        t = make([Utterance("A", "你好", 0, 1)])
        rate, counts = compute_cer(t, t, POLICY)
        assert rate == 0.0
        assert counts == EditCounts(0, 0, 0, 2)

    def test_ignores_speaker_labels(self):
        ref = make([Utterance("A", "你好", 0, 1), Utterance("B", "早", 1, 2)])
        hyp = make([Utterance("B", "你好", 0, 1), Utterance("A", "早", 1, 2)])
        assert compute_cer(ref, hyp, POLICY)[0] == 0.0

    def test_deletion_rate(self):
        # hand-run DP: "你好早" vs "你早" is one deletion over 3 units
        ref = make([Utterance("A", "你好", 0, 1), Utterance("B", "早", 1, 2)])
        hyp = make([Utterance("X", "你早", 0, 2)])
        rate, counts = compute_cer(ref, hyp, POLICY)
        assert rate == pytest.approx(1 / 3)
        assert counts == EditCounts(0, 1, 0, 3)

    def test_empty_reference_rejected(self):
        ref = make([])
        hyp = make([Utterance("A", "x", 0, 1)])
        with pytest.raises(ValueError, match="empty reference"):
            compute_cer(ref, hyp, POLICY)


class TestAssignmentCosts:
    def test_single_pair(self):
        costs = assignment_costs({"A": "ab"}, {"X": "ab"})
        assert costs.tolist() == [[0]]

    def test_pads_smaller_side(self):
        # hand-run DP per cell: pad row charges each hyp text as insertions
        costs = assignment_costs({"A": "ab"}, {"X": "ab", "Y": "cd"})
        assert costs.tolist() == [[0, 2], [2, 2]]

    def test_both_empty(self):
        costs = assignment_costs({}, {})
        assert costs.shape == (0, 0)


class TestSolveAssignment:
    def test_diagonal_optimum(self):
        result = solve_assignment(np.array([[0, 1], [1, 0]]))
        assert result.mapping == {0: 0, 1: 1}
        assert result.total_cost == 0

    def test_anti_diagonal_optimum(self):
        result = solve_assignment(np.array([[5, 1], [1, 5]]))
        assert result.mapping == {0: 1, 1: 0}
        assert result.total_cost == 2

    def test_matches_exhaustive_minimum(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            n = int(rng.integers(1, 7))
            cost = rng.integers(0, 100, size=(n, n))
            assert solve_assignment(cost).total_cost == exhaustive_assignment(cost)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            solve_assignment(np.zeros((2, 3)))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="non-negative"):
            solve_assignment(np.array([[-1.0, 0.0], [0.0, 1.0]]))


class TestCpCer:
    def test_identity(self):
        rng = np.random.default_rng(19)
        t = random_transcript(rng)
        assert cp_cer(t, t, POLICY)[0] == 0.0

    def test_bijective_relabeling_invariance(self):
        rng = np.random.default_rng(23)
        ref = random_transcript(rng, n_speakers=3)
        hyp = random_transcript(rng, n_speakers=3)
        base, _ = cp_cer(ref, hyp, POLICY)
        relabeled = make(
            [
                Utterance("Z-" + u.speaker, u.text, u.start, u.end)
                for u in hyp.utterances
            ]
        )
        assert cp_cer(ref, relabeled, POLICY)[0] == base

    def test_speaker_count_mismatch_penalized(self):
        # exhaustive check: best map charges 2 insertions + 2 deletions -> 4/4
        ref = make([Utterance("A", "ab", 0, 1), Utterance("B", "cd", 1, 2)])
        hyp = make([Utterance("X", "abcd", 0, 2)])
        rate, result = cp_cer(ref, hyp, POLICY)
        assert rate == 1.0
        assert result.total_cost == 4

    def test_mapping_names_and_pads(self):
        ref = make([Utterance("A", "ab", 0, 1), Utterance("B", "cd", 1, 2)])
        hyp = make([Utterance("X", "ab", 0, 1)])
        _, result = cp_cer(ref, hyp, POLICY)
        assert result.mapping["A"] == "X"
        assert result.mapping["B"] is None

    def test_rate_consistent_with_total_cost(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            ref = random_transcript(rng, n_speakers=int(rng.integers(1, 5)))
            hyp = random_transcript(rng, n_speakers=int(rng.integers(1, 5)))
            rate, result = cp_cer(ref, hyp, POLICY)
            ref_len = len(concat_all(ref, POLICY))
            assert rate == result.total_cost / ref_len

    def test_counts_sum_to_total_cost(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            ref = random_transcript(rng, n_speakers=3)
            hyp = random_transcript(rng, n_speakers=2)
            _, result, counts = cp_cer_counts(ref, hyp, POLICY)
            assert counts.distance() == result.total_cost
            assert counts.reference_length == len(concat_all(ref, POLICY))


class TestSaCer:
    def test_identity(self):
        rng = np.random.default_rng(37)
        t = random_transcript(rng)
        rate, _ = sa_cer(t, t, POLICY)
        assert rate == 0.0

    def test_swapped_texts_across_names(self):
        # hand-run DP per name: 2 substitutions each side -> 4/4
        ref, hyp = two_speaker_pair()
        rate, counts = sa_cer(ref, hyp, POLICY)
        assert rate == 1.0
        assert counts.substitutions == 4

    def test_same_pair_scores_zero_under_cp(self):
        ref, hyp = two_speaker_pair()
        assert cp_cer(ref, hyp, POLICY)[0] == 0.0

    def test_name_absent_on_one_side(self):
        ref = make([Utterance("A", "ab", 0, 1)])
        hyp = make([Utterance("A", "ab", 0, 1), Utterance("B", "xyz", 1, 2)])
        rate, counts = sa_cer(ref, hyp, POLICY)
        assert counts.insertions == 3
        assert rate == pytest.approx(3 / 2)

    def test_dominance_on_equal_name_sets(self):
        rng = np.random.default_rng(41)
        speakers = ["A", "B", "C"]
        for _ in range(200):
            ref = random_transcript(rng, speakers=speakers)
            hyp = random_transcript(rng, speakers=speakers)
            _, _, cp_counts = cp_cer_counts(ref, hyp, POLICY)
            _, sa_counts = sa_cer(ref, hyp, POLICY)
            assert cp_counts.distance() <= sa_counts.distance()


class TestDeltas:
    def test_delta_cp(self):
        assert delta_cp(13.97, 16.05) == pytest.approx(2.08)

    def test_delta_sa(self):
        assert delta_sa(13.98, 15.57) == pytest.approx(1.59)

    def test_zero_when_equal(self):
        assert delta_cp(0.4, 0.4) == 0.0
        assert delta_sa(0.4, 0.4) == 0.0

    def test_may_be_negative(self):
        assert delta_sa(0.5, 0.4) == pytest.approx(-0.1)


class TestScorePair:
    def test_reports_all_metrics(self):
        rng = np.random.default_rng(43)
        ref = random_transcript(rng)
        hyp = random_transcript(rng)
        report = score_pair(ref, hyp, POLICY)
        assert report.clip_id == ref.clip_id
        assert set(report.edit_counts) == {"cer", "cpcer", "sacer"}
        assert report.delta_cp == report.cpcer - report.cer
        assert report.delta_sa == report.sacer - report.cer

    def test_without_sacer(self):
        rng = np.random.default_rng(47)
        ref = random_transcript(rng)
        report = score_pair(ref, anonymize(ref), POLICY, with_sacer=False)
        assert report.sacer is None and report.delta_sa is None
        assert report.cpcer == 0.0


class TestAggregate:
    def _report(self, clip_id, errs, ref_len):
        counts = EditCounts(errs, 0, 0, ref_len)
        rate = errs / ref_len
        return ScoreReport(clip_id=clip_id, cer=rate, edit_counts={"cer": counts})

    def test_micro_average_pools_counts(self):
        pooled = aggregate([self._report("a", 1, 10), self._report("b", 3, 10)])
        assert pooled.cer == pytest.approx(0.20)
        assert pooled.clip_id == "AGGREGATE"

    def test_single_clip_identity(self):
        report = self._report("a", 2, 8)
        pooled = aggregate([report])
        assert pooled.cer == report.cer
        assert pooled.edit_counts["cer"] == report.edit_counts["cer"]

    def test_micro_differs_from_macro(self):
        # pooled (0+5)/(5+15) = 0.25; the macro mean would be 0.1667
        pooled = aggregate([self._report("a", 0, 5), self._report("b", 5, 15)])
        assert pooled.cer == pytest.approx(0.25)
        assert pooled.cer != pytest.approx((0 / 5 + 5 / 15) / 2)

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            aggregate([])

    def test_mixed_availability_rejected(self):
        rng = np.random.default_rng(53)
        full = score_pair(random_transcript(rng, clip_id="a"), random_transcript(rng), POLICY)
        partial = self._report("b", 1, 10)
        with pytest.raises(ValueError, match="mixed"):
            aggregate([full, partial])

    def test_fold_order_independent(self):
        rng = np.random.default_rng(59)
        reports = [
            score_pair(random_transcript(rng, clip_id=f"c{i}"), random_transcript(rng), POLICY)
            for i in range(5)
        ]
        a = aggregate(reports)
        b = aggregate(list(reversed(reports)))
        assert a == b
