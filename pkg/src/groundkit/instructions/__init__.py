"""Instruction synthesis, prompt assembly, training-mix sampling and export."""

from .client import ClientConfig, submit_prompts
from .mix import (
    InsufficientPoolError,
    MixSpec,
    export_sft,
    load_sft,
    mix_counts,
    rejection_sample_errors,
    sample_mix,
    select_rl_unseen,
)
from .pipeline import SynthResult, read_pool, synthesize, write_pool
from .prompts import ModelResponse, PromptKind, PromptRequest, build_prompt, validate_response
from .synth import (
    InstructionSample,
    Kind,
    Provenance,
    Relation,
    SpatialConfig,
    SpatialRelation,
    Subkind,
    is_textual,
    make_general_instruction,
    make_spatial_instruction,
    make_textual_instruction,
    spatial_relations,
)
from .templates import general_templates, spatial_templates, textual_templates

__all__ = [
    "ClientConfig", "InsufficientPoolError", "InstructionSample", "Kind", "MixSpec", "ModelResponse",
    "PromptKind", "PromptRequest", "Provenance", "Relation", "SpatialConfig", "SpatialRelation",
    "Subkind", "SynthResult", "build_prompt", "export_sft", "general_templates", "is_textual", "load_sft",
    "make_general_instruction", "make_spatial_instruction", "make_textual_instruction", "mix_counts",
    "read_pool", "rejection_sample_errors", "sample_mix", "select_rl_unseen", "spatial_relations",
    "spatial_templates", "submit_prompts", "synthesize", "textual_templates", "validate_response",
    "write_pool",
]
