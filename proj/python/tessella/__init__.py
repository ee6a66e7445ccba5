"""Painting stylometry toolkit.

Thin package wrapper over the compiled extension. Everything substantive
lives in C++; this module just re-exports the binding surface.
"""

from tessella._tessella import (
    FEATURE_DIM,
    ConfigError,
    ExtractOutcome,
    InputError,
    PatchRef,
    PipelineError,
    RunConfig,
    Stages,
    TileIndex,
    TilePlan,
    VocabTree,
    build_vocab,
    config_from_json,
    extract_patch_features,
    lda_fit,
    load_config,
    load_embedding,
    load_weights,
    run_all,
    run_embed,
    run_extract,
    run_report,
    run_topics,
    run_vocab,
    tile,
    tsne,
    vocab_from_json,
)

__version__ = "0.1.0"

__all__ = [
    "FEATURE_DIM",
    "ConfigError",
    "ExtractOutcome",
    "InputError",
    "PatchRef",
    "PipelineError",
    "RunConfig",
    "Stages",
    "TileIndex",
    "TilePlan",
    "VocabTree",
    "build_vocab",
    "config_from_json",
    "extract_patch_features",
    "lda_fit",
    "load_config",
    "load_embedding",
    "load_weights",
    "run_all",
    "run_embed",
    "run_extract",
    "run_report",
    "run_topics",
    "run_vocab",
    "tile",
    "tsne",
    "vocab_from_json",
]
