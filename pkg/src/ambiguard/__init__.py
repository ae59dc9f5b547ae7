"""Ambiguity-guided query rewriting middleware.

Classify conversational queries as clear or ambiguous and route only the
ambiguous ones to a pluggable rewriter.
"""

from .classifier import ClassifierModel, TrainConfig, TrainResult, classify, train
from .core import (
    AmbiguityLabel,
    AmbiguityType,
    AmbiguityVerdict,
    ChatTurn,
    Conversation,
    DatasetError,
    DatasetRecord,
    Query,
    Role,
    VerdictSource,
    parse_dataset,
    serialize_dataset,
    truncate_history,
)
from .augment import (
    AugmentationReport,
    AugmentationRule,
    add_referential,
    augment_corpus,
    omit_details,
    remove_entity_types,
    vague_statement,
)
from .checkpoint import CheckpointError, load_checkpoint, load_checkpoint_file, save_checkpoint, save_checkpoint_file
from .embed import Embedder, EmbedderError, HashingEmbedder, RemoteEmbedder, cosine
from .features import FeatureVector, ScalerParams, apply_scaler, extract, fit_scaler
from .lexical import Lexicons, MaskedQuery, lexical_override, mask_entities
from .metrics import ClassificationReport, FrameworkReport, bleu_avg12, classification_metrics, compare_frameworks
from .pipeline import FrameworkMode, RoutingRecord, make_detector, process, process_batch
from .rewrite import (
    MockRewriter,
    RewriteContext,
    RewriteResult,
    Rewriter,
    TemplateRewriter,
    build_rewrite_prompt,
    llm_detect,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityLabel",
    "AmbiguityType",
    "AmbiguityVerdict",
    "AugmentationReport",
    "AugmentationRule",
    "ChatTurn",
    "ClassificationReport",
    "ClassifierModel",
    "CheckpointError",
    "Conversation",
    "DatasetError",
    "DatasetRecord",
    "Embedder",
    "EmbedderError",
    "FeatureVector",
    "FrameworkMode",
    "FrameworkReport",
    "HashingEmbedder",
    "Lexicons",
    "MaskedQuery",
    "MockRewriter",
    "Query",
    "RemoteEmbedder",
    "RewriteContext",
    "RewriteResult",
    "Rewriter",
    "Role",
    "RoutingRecord",
    "ScalerParams",
    "TemplateRewriter",
    "TrainConfig",
    "TrainResult",
    "VerdictSource",
    "add_referential",
    "apply_scaler",
    "augment_corpus",
    "bleu_avg12",
    "build_rewrite_prompt",
    "classification_metrics",
    "classify",
    "compare_frameworks",
    "cosine",
    "extract",
    "fit_scaler",
    "lexical_override",
    "llm_detect",
    "load_checkpoint",
    "load_checkpoint_file",
    "make_detector",
    "mask_entities",
    "omit_details",
    "parse_dataset",
    "process",
    "process_batch",
    "remove_entity_types",
    "save_checkpoint",
    "save_checkpoint_file",
    "serialize_dataset",
    "train",
    "truncate_history",
    "vague_statement",
]
