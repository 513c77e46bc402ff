"""dyspeech: data pipeline and evaluation toolkit for personalizing
dysarthric speech-to-text with synthetic speech.

The package covers the loop around the neural models, not the models
themselves: curating pseudo-labeled corpora by dual-ASR agreement, planning
severity-controlled synthetic speech via weighted speaker-embedding
combination, mixing fine-tuning datasets at a fixed real/synthetic duration
ratio, and scoring ASR output with pooled WER/CER plus bootstrap confidence
intervals.
"""

from .metrics import (
    NormalizationPolicy,
    DEFAULT_POLICY,
    normalize,
    tokenize,
    Alignment,
    align,
    edit_distance,
    UtteranceScore,
    word_score,
    char_score,
    utterance_rate,
    corpus_rate,
    ConfidenceInterval,
    bootstrap_ci,
)
from .manifest import Utterance, Manifest, read_manifest, write_manifest, stats
from .agreement import TranscriptPair, agreement_filter, filter_report
from .embeddings import (
    SpeakerEmbedding,
    SeveritySetting,
    SEVERITY_PRESETS,
    combine,
    equal_weight_mean,
    validate_setting,
)
from .textselect import SelectionPolicy, filter_sentences, sample_sentences
from .scheduler import CheckpointRef, SynthesisJob, SynthesisPlan, build_plan, execute_plan
from .mixer import MixSpec, mix, describe
from .harness import ExperimentConfig, MetricReport, evaluate, severity_rank, compare, report_render

__version__ = "0.1.0"

__all__ = [
    "NormalizationPolicy",
    "DEFAULT_POLICY",
    "normalize",
    "tokenize",
    "Alignment",
    "align",
    "edit_distance",
    "UtteranceScore",
    "word_score",
    "char_score",
    "utterance_rate",
    "corpus_rate",
    "ConfidenceInterval",
    "bootstrap_ci",
    "Utterance",
    "Manifest",
    "read_manifest",
    "write_manifest",
    "stats",
    "TranscriptPair",
    "agreement_filter",
    "filter_report",
    "SpeakerEmbedding",
    "SeveritySetting",
    "SEVERITY_PRESETS",
    "combine",
    "equal_weight_mean",
    "validate_setting",
    "SelectionPolicy",
    "filter_sentences",
    "sample_sentences",
    "CheckpointRef",
    "SynthesisJob",
    "SynthesisPlan",
    "build_plan",
    "execute_plan",
    "MixSpec",
    "mix",
    "describe",
    "ExperimentConfig",
    "MetricReport",
    "evaluate",
    "severity_rank",
    "compare",
    "report_render",
    "__version__",
]
