"""Report emission: JSON (full precision) and CSV (percent, 2 decimals).

JSON carries rates as fractions at full precision; CSV and console
output show percentages rounded to 2 decimals, the usual presentation
for these metrics.  The CSV count columns (subs/dels/ins/ref_len) carry
the cpCER alignment counts when available, else the CER counts.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Sequence

from .textdist import NormalizationPolicy
from .transcript import ScoreReport

TOOL_NAME = "sdrkit"

CSV_FIELDS = [
    "clip_id",
    "cer",
    "cpcer",
    "sacer",
    "delta_cp",
    "delta_sa",
    "subs",
    "dels",
    "ins",
    "ref_len",
]


def format_percent(rate: float | None) -> str:
    return "" if rate is None else f"{100.0 * rate:.2f}"


def report_to_dict(r: ScoreReport) -> dict:
    return {
        "clip_id": r.clip_id,
        "cer": r.cer,
        "cpcer": r.cpcer,
        "sacer": r.sacer,
        "delta_cp": r.delta_cp,
        "delta_sa": r.delta_sa,
        "edit_counts": {name: counts.to_dict() for name, counts in sorted(r.edit_counts.items())},
    }


def reports_to_json(
    reports: Sequence[ScoreReport],
    aggregate: ScoreReport | None,
    policy: NormalizationPolicy,
    mode: str,
) -> str:
    payload = {
        "tool": TOOL_NAME,
        "mode": mode,
        "policy": policy.to_dict(),
        "pooling": "micro",
        "clips": [report_to_dict(r) for r in sorted(reports, key=lambda r: r.clip_id)],
        "aggregate": None if aggregate is None else report_to_dict(aggregate),
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def _csv_row(r: ScoreReport) -> dict:
    counts = r.edit_counts.get("cpcer") or r.edit_counts.get("cer")
    row = {
        "clip_id": r.clip_id,
        "cer": format_percent(r.cer),
        "cpcer": format_percent(r.cpcer),
        "sacer": format_percent(r.sacer),
        "delta_cp": format_percent(r.delta_cp),
        "delta_sa": format_percent(r.delta_sa),
    }
    if counts is not None:
        row.update(
            {
                "subs": counts.substitutions,
                "dels": counts.deletions,
                "ins": counts.insertions,
                "ref_len": counts.reference_length,
            }
        )
    return row


def reports_to_csv(
    reports: Sequence[ScoreReport], aggregate: ScoreReport | None
) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in sorted(reports, key=lambda r: r.clip_id):
        writer.writerow(_csv_row(r))
    if aggregate is not None:
        writer.writerow(_csv_row(aggregate))
    return buf.getvalue()


def write_reports(
    out_dir: str | Path,
    reports: Sequence[ScoreReport],
    aggregate: ScoreReport | None,
    policy: NormalizationPolicy,
    mode: str,
) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    csv_path = out_dir / "report.csv"
    json_path.write_text(reports_to_json(reports, aggregate, policy, mode), encoding="utf-8")
    csv_path.write_text(reports_to_csv(reports, aggregate), encoding="utf-8")
    return json_path, csv_path


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def write_provenance(
    out_dir: str | Path,
    command: str,
    config: dict,
    input_paths: Sequence[str | Path],
    version: str,
) -> Path:
    """Write the machine-readable provenance block every command emits."""
    digests = {str(p): sha256_file(p) for p in sorted(str(p) for p in input_paths)}
    payload = {
        "tool": TOOL_NAME,
        "version": version,
        "command": command,
        "config": config,
        "input_digests": digests,
    }
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "provenance.json"
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def console_summary(reports: Sequence[ScoreReport], aggregate: ScoreReport | None) -> str:
    lines = []
    header = f"{'clip_id':<24} {'cer':>8} {'cpcer':>8} {'sacer':>8} {'d_cp':>8} {'d_sa':>8}"
    lines.append(header)
    rows = sorted(reports, key=lambda r: r.clip_id)
    if aggregate is not None:
        rows = rows + [aggregate]
    for r in rows:
        lines.append(
            f"{r.clip_id:<24} "
            f"{format_percent(r.cer) or '-':>8} "
            f"{format_percent(r.cpcer) or '-':>8} "
            f"{format_percent(r.sacer) or '-':>8} "
            f"{format_percent(r.delta_cp) or '-':>8} "
            f"{format_percent(r.delta_sa) or '-':>8}"
        )
    return "\n".join(lines)
