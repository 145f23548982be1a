"""sdrkit: evaluation and data preparation for speaker-attributed transcription.

The toolkit scores speaker-attributed transcripts (CER, cpCER, saCER and
their deltas), generates speaker-registration scenarios, merges cascaded
diarization + recognition outputs into hypothesis transcripts, and
synthesizes multi-speaker audio mixtures with aligned references.
"""

__version__ = "0.1.0"

from .audio import AudioClip, load_wav, read_wav, resample, save_wav, write_wav
from .cascade import (
    DiarSegment,
    TimedToken,
    assign_tokens,
    oracle_cascade,
    parse_ctm,
    parse_rttm,
    shift_segments,
    write_ctm,
    write_rttm,
)
from .metrics import (
    AssignmentResult,
    aggregate,
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
from .registration import (
    RegistMode,
    RegistrationScenario,
    ScenarioVerdict,
    SpeakerProfile,
    average_embeddings,
    build_profile,
    build_scenario,
    load_pool,
    save_pool,
    segment_enrollment,
    verify_scenario,
)
from .simulate import (
    CorpusIndex,
    MixtureSpec,
    SourceUtterance,
    Turn,
    sample_mixture_spec,
    scale_noise_to_snr,
    schedule_turns,
    split_clips,
    synthesize_mixture,
    turns_to_transcript,
)
from .textdist import EditCounts, NormalizationPolicy, cer, edit_distance, normalize
from .transcript import (
    SATranscript,
    ScoreReport,
    Utterance,
    anonymize,
    load_transcript,
    parse_transcript,
    save_transcript,
    serialize_transcript,
)
