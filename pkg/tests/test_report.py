from __future__ import annotations

import json

import numpy as np
import pytest

from sdrkit import EditCounts, NormalizationPolicy, ScoreReport, aggregate, score_pair
from sdrkit.report import format_percent, reports_to_csv, reports_to_json

from conftest import random_transcript

POLICY = NormalizationPolicy()


def sample_reports():
    rng = np.random.default_rng(71)
    reports = []
    for i in range(3):
        ref = random_transcript(rng, clip_id=f"c{i}")
        hyp = random_transcript(rng, clip_id=f"c{i}")
        reports.append(score_pair(ref, hyp, POLICY))
    return reports


class TestScoreReportInvariants:
    def test_inconsistent_delta_rejected(self):
        with pytest.raises(ValueError, match="delta_cp"):
            ScoreReport(clip_id="c", cer=0.1, cpcer=0.2, delta_cp=0.5)

    def test_zero_reference_length_rejected(self):
        with pytest.raises(ValueError, match="reference_length"):
            ScoreReport(clip_id="c", cer=0.0, edit_counts={"cer": EditCounts(0, 0, 0, 0)})

    def test_signed_deltas_allowed(self):
        report = ScoreReport(clip_id="c", cer=0.3, sacer=0.2, delta_sa=0.2 - 0.3)
        assert report.delta_sa < 0


class TestCsv:
    def test_percent_formatting_two_decimals(self):
        assert format_percent(0.1397) == "13.97"
        assert format_percent(1.0) == "100.00"
        assert format_percent(None) == ""

    def test_csv_counts_come_from_cpcer(self):
        reports = sample_reports()
        csv_text = reports_to_csv(reports, aggregate(reports))
        lines = csv_text.strip().split("\n")
        header = lines[0].split(",")
        row = dict(zip(header, lines[1].split(",")))
        expected = reports[0].edit_counts["cpcer"]
        assert int(row["subs"]) == expected.substitutions
        assert int(row["ref_len"]) == expected.reference_length

    def test_aggregate_row_is_last(self):
        reports = sample_reports()
        csv_text = reports_to_csv(reports, aggregate(reports))
        assert csv_text.strip().split("\n")[-1].startswith("AGGREGATE,")


class TestJson:
    def test_full_precision_fractions(self):
        reports = sample_reports()
        payload = json.loads(reports_to_json(reports, aggregate(reports), POLICY, "match-regist"))
        assert payload["pooling"] == "micro"
        assert payload["policy"]["strip_whitespace"] is True
        clip = payload["clips"][0]
        assert clip["cer"] == reports[0].cer  # no rounding applied
        assert clip["edit_counts"]["cer"]["ref_len"] > 0
