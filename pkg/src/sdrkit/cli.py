"""Command-line surface: evaluate, simulate, scenario, cascade.

Exit codes: 0 on success, 1 for an unusable configuration, 2 when some
per-item work failed (failed items are listed as JSON lines on stderr
and the remaining items are still processed).  Every run writes a
provenance.json with the tool version, the configuration and input
digests, and re-runs with identical inputs/config/seed produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import load_wav, save_wav
from .cascade import assign_tokens, parse_ctm, parse_rttm
from .figures import save_delta_figure, save_metric_figure
from .metrics import aggregate, score_pair
from .registration import (
    RegistMode,
    build_scenario,
    load_pool,
    scenario_to_dict,
    verify_scenario,
)
from .report import console_summary, write_provenance, write_reports
from .simulate import (
    CorpusIndex,
    load_path_manifest,
    load_source_manifest,
    sample_mixture_spec,
    spec_to_dict,
    synthesize_mixture,
)
from .textdist import NormalizationPolicy
from .transcript import SATranscript, anonymize, load_transcript, save_transcript


def _emit_error(**fields) -> None:
    print(json.dumps(fields, ensure_ascii=False), file=sys.stderr)


def _derive_seed(seed: int, key) -> int:
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1  # keep it in int64 range


def _policy_from_args(args) -> NormalizationPolicy:
    return NormalizationPolicy(
        strip_whitespace=args.policy_strip_whitespace,
        strip_punctuation=args.policy_strip_punct,
        unify_width=args.policy_unify_width,
        casefold=args.policy_casefold,
    )


def _load_transcript_dir(path: Path) -> tuple[dict[str, SATranscript], list[Path], list[dict]]:
    transcripts: dict[str, SATranscript] = {}
    files = sorted(path.glob("*.jsonl"))
    errors = []
    for file in files:
        try:
            t = load_transcript(file)
        except ValueError as exc:
            errors.append({"error": "parse-failure", "item": str(file), "detail": str(exc)})
            continue
        if t.clip_id in transcripts:
            errors.append({"error": "duplicate-clip-id", "item": str(file), "detail": t.clip_id})
            continue
        transcripts[t.clip_id] = t
    return transcripts, files, errors


def _score_item(item) -> tuple[str, object, str | None]:
    clip_id, ref, hyp, policy, mode = item
    try:
        if mode == RegistMode.NO_REGIST.value:
            hyp = anonymize(hyp)
        report = score_pair(ref, hyp, policy, with_sacer=mode != RegistMode.NO_REGIST.value)
        return clip_id, report, None
    except ValueError as exc:
        return clip_id, None, str(exc)


def cmd_evaluate(args) -> int:
    ref_dir, hyp_dir, out_dir = Path(args.ref), Path(args.hyp), Path(args.out)
    policy = _policy_from_args(args)
    refs, ref_files, errors = _load_transcript_dir(ref_dir)
    hyps, hyp_files, hyp_errors = _load_transcript_dir(hyp_dir)
    errors += hyp_errors

    matched = sorted(set(refs) & set(hyps))
    for clip_id in sorted(set(refs) - set(hyps)):
        errors.append({"error": "unmatched-clip", "item": clip_id, "detail": "missing hypothesis"})
    for clip_id in sorted(set(hyps) - set(refs)):
        errors.append({"error": "unmatched-clip", "item": clip_id, "detail": "missing reference"})
    if not matched:
        for err in errors:
            _emit_error(**err)
        _emit_error(error="no-matching-clips", item=str(ref_dir), detail="empty clip_id intersection")
        return 1

    items = [(clip_id, refs[clip_id], hyps[clip_id], policy, args.mode) for clip_id in matched]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_score_item, items))
    else:
        results = [_score_item(item) for item in items]

    reports = []
    for clip_id, report, error in sorted(results, key=lambda r: r[0]):
        if error is not None:
            errors.append({"error": "scoring-failure", "item": clip_id, "detail": error})
        else:
            reports.append(report)

    if not reports:
        for err in errors:
            _emit_error(**err)
        _emit_error(error="no-scorable-clips", item=str(ref_dir), detail="all clips failed")
        return 1

    agg = aggregate(reports)
    write_reports(out_dir, reports, agg, policy, args.mode)
    if args.figures:
        save_metric_figure(reports, agg, out_dir / "metrics.png")
        save_delta_figure(reports, agg, out_dir / "deltas.png")
    write_provenance(
        out_dir,
        command="evaluate",
        config=_config_dict(args),
        input_paths=[*ref_files, *hyp_files],
        version=__version__,
    )
    print(console_summary(reports, agg))
    for err in errors:
        _emit_error(**err)
    return 2 if errors else 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out)
    manifest_path = Path(args.manifest)
    speakers = load_source_manifest(manifest_path)
    input_paths = [manifest_path]
    noises: tuple[str, ...] = ()
    rirs: tuple[str, ...] = ()
    if args.noise:
        noises = load_path_manifest(Path(args.noise))
        input_paths.append(Path(args.noise))
    if args.rir:
        rirs = load_path_manifest(Path(args.rir))
        input_paths.append(Path(args.rir))
    if not noises:
        _emit_error(warning="no-noise-manifest", detail="running in clean concatenation mode")
    corpus = CorpusIndex(speakers=speakers, noises=noises, rirs=rirs)

    base = manifest_path.parent
    cache: dict[str, object] = {}

    def resolver(ref: str):
        if ref not in cache:
            path = Path(ref)
            if not path.is_absolute():
                path = base / path
            cache[ref] = load_wav(path)
        return cache[ref]

    for sub in ("wav", "transcripts", "specs"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)

    errors = []
    manifest_rows = []
    for i in range(args.n):
        clip_id = f"sim-{i:06d}"
        child_seed = _derive_seed(args.seed, i)
        try:
            spec = sample_mixture_spec(corpus, np.random.default_rng(child_seed), seed=child_seed)
            audio, transcript = synthesize_mixture(spec, resolver, clip_id=clip_id)
        except (ValueError, OSError) as exc:
            errors.append({"error": "simulation-failure", "item": clip_id, "detail": str(exc)})
            continue
        wav_rel = f"wav/{clip_id}.wav"
        transcript_rel = f"transcripts/{clip_id}.jsonl"
        spec_rel = f"specs/{clip_id}.json"
        save_wav(out_dir / wav_rel, audio)
        save_transcript(out_dir / transcript_rel, transcript)
        (out_dir / spec_rel).write_text(
            json.dumps(spec_to_dict(spec), ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        manifest_rows.append(
            {
                "clip_id": clip_id,
                "wav": wav_rel,
                "transcript": transcript_rel,
                "spec": spec_rel,
                "seed": spec.seed,
            }
        )

    (out_dir / "manifest.jsonl").write_text(
        "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in manifest_rows),
        encoding="utf-8",
    )
    write_provenance(
        out_dir,
        command="simulate",
        config=_config_dict(args),
        input_paths=input_paths,
        version=__version__,
    )
    for err in errors:
        _emit_error(**err)
    return 2 if errors else 0


def cmd_scenario(args) -> int:
    out_dir = Path(args.out)
    pool_path = Path(args.pool)
    try:
        pool = load_pool(pool_path)
    except ValueError as exc:
        _emit_error(error="pool-load-failure", item=str(pool_path), detail=str(exc))
        return 1
    refs, ref_files, errors = _load_transcript_dir(Path(args.ref))
    if not refs:
        for err in errors:
            _emit_error(**err)
        _emit_error(error="no-references", item=args.ref, detail="no parsable transcripts")
        return 1

    mode = RegistMode(args.mode)
    out_dir.mkdir(parents=True, exist_ok=True)
    for clip_id in sorted(refs):
        gt = refs[clip_id].speaker_set()
        rng = np.random.default_rng(_derive_seed(args.seed, clip_id))
        try:
            scenario = build_scenario(gt, pool, mode, rng, n_ov_range=(1, args.n_ov_max))
        except ValueError as exc:
            errors.append({"error": "scenario-failure", "item": clip_id, "detail": str(exc)})
            continue
        verdict = verify_scenario(scenario, gt)
        if not verdict.ok:
            errors.append({"error": "scenario-invalid", "item": clip_id, "detail": verdict.clause})
            continue
        (out_dir / f"{clip_id}.json").write_text(
            json.dumps(scenario_to_dict(scenario), ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )

    write_provenance(
        out_dir,
        command="scenario",
        config=_config_dict(args),
        input_paths=[pool_path, *ref_files],
        version=__version__,
    )
    for err in errors:
        _emit_error(**err)
    return 2 if errors else 0


def cmd_cascade(args) -> int:
    rttm_dir, ctm_dir, out_dir = Path(args.rttm), Path(args.ctm), Path(args.out)
    rttm_files = {p.stem: p for p in sorted(rttm_dir.glob("*.rttm"))}
    ctm_files = {p.stem: p for p in sorted(ctm_dir.glob("*.ctm"))}
    errors = []
    stems = sorted(set(rttm_files) & set(ctm_files))
    for stem in sorted(set(rttm_files) ^ set(ctm_files)):
        errors.append({"error": "unpaired-recording", "item": stem, "detail": "missing rttm or ctm"})
    if not stems:
        for err in errors:
            _emit_error(**err)
        _emit_error(error="no-recordings", item=str(rttm_dir), detail="no rttm/ctm pairs")
        return 1

    out_dir.mkdir(parents=True, exist_ok=True)
    for stem in stems:
        try:
            segments = parse_rttm(rttm_files[stem].read_bytes())
            grouped = parse_ctm(ctm_files[stem].read_bytes())
        except ValueError as exc:
            errors.append({"error": "parse-failure", "item": stem, "detail": str(exc)})
            continue
        recording_id = segments[0].recording_id if segments else stem
        tokens = grouped.get(recording_id, [])
        if not tokens:
            _emit_error(warning="empty-token-file", item=stem, detail="writing empty transcript")
        try:
            transcript = assign_tokens(tokens, segments, clip_id=recording_id)
        except ValueError as exc:
            errors.append({"error": "alignment-failure", "item": stem, "detail": str(exc)})
            continue
        save_transcript(out_dir / f"{recording_id}.jsonl", transcript)

    write_provenance(
        out_dir,
        command="cascade",
        config=_config_dict(args),
        input_paths=[*rttm_files.values(), *ctm_files.values()],
        version=__version__,
    )
    for err in errors:
        _emit_error(**err)
    return 2 if errors else 0


def _config_dict(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    parser.add_argument("--jobs", type=int, default=1, help="worker pool size (default 1)")
    parser.add_argument("--out", required=True, help="output directory")


def _add_policy(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--policy-strip-whitespace", action=argparse.BooleanOptionalAction, default=True
    )
    parser.add_argument(
        "--policy-strip-punct", action=argparse.BooleanOptionalAction, default=False
    )
    parser.add_argument(
        "--policy-unify-width", action=argparse.BooleanOptionalAction, default=False
    )
    parser.add_argument(
        "--policy-casefold", action=argparse.BooleanOptionalAction, default=False
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdrkit",
        description="Scoring, registration scenarios, cascade alignment and "
        "mixture simulation for speaker-attributed transcription.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="score hypothesis transcripts against references")
    p_eval.add_argument("--ref", required=True, help="directory of reference transcript JSONL")
    p_eval.add_argument("--hyp", required=True, help="directory of hypothesis transcript JSONL")
    p_eval.add_argument(
        "--mode",
        choices=[m.value for m in RegistMode],
        default=RegistMode.MATCH_REGIST.value,
        help="registration mode; no-regist anonymizes hypotheses and omits saCER",
    )
    p_eval.add_argument(
        "--figures", action=argparse.BooleanOptionalAction, default=True,
        help="render metric/delta figures next to the reports",
    )
    _add_policy(p_eval)
    _add_common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="synthesize multi-speaker mixtures")
    p_sim.add_argument("--manifest", required=True, help="source-corpus manifest JSONL")
    p_sim.add_argument("--noise", help="noise manifest JSONL (paths)")
    p_sim.add_argument("--rir", help="room-impulse-response manifest JSONL (paths)")
    p_sim.add_argument("--n", type=int, default=1, help="number of clips to generate")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_scen = sub.add_parser("scenario", help="generate registration scenarios per clip")
    p_scen.add_argument("--ref", required=True, help="directory of reference transcript JSONL")
    p_scen.add_argument("--pool", required=True, help="speaker profile pool JSONL")
    p_scen.add_argument(
        "--mode", choices=[m.value for m in RegistMode], required=True
    )
    p_scen.add_argument("--n-ov-max", type=int, default=50, help="upper bound for n_ov")
    _add_common(p_scen)
    p_scen.set_defaults(func=cmd_scenario)

    p_casc = sub.add_parser("cascade", help="merge RTTM + CTM into hypothesis transcripts")
    p_casc.add_argument("--rttm", required=True, help="directory of RTTM files")
    p_casc.add_argument("--ctm", required=True, help="directory of CTM token files")
    _add_common(p_casc)
    p_casc.set_defaults(func=cmd_cascade)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
