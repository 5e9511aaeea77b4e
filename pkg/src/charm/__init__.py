"""Interactive text-to-image refinement engine.

Steer a deterministic toy diffusion backbone by scaling its cross-attention
per token, explain generations with attention heatmaps, mine and explore
style modifiers, inpaint masked regions, and track everything in versioned
sessions. Usable as a library, CLI (``charm``), HTTP service, and through
the companion web UI.
"""

from .attention import AttentionAdjustment, apply_adjustment, validate
from .catalog import (
    ModifierCatalog,
    ModifierEntry,
    PromptRecord,
    dissimilar,
    load_catalog,
    load_corpus,
    mine,
    save_catalog,
    search,
    similar,
)
from .diffusion import (
    AttentionTrace,
    DenoiserWeights,
    GeneratedImage,
    ModelConfig,
    ToyDiffusionModel,
    build_model,
)
from .engine import CharmEngine, EngineConfig
from .explain import Explanation, aggregate, similar_tokens
from .inpaint import InpaintRequest, Mask, inpaint, rasterize_strokes
from .metrics import SsimParams, replay, ssim
from .refine import RefinementSuggestion, RefinerConfig, refine
from .session import Session, SessionStore, Version, commit, diff, load, persist
from .text import Prompt, TextEncoder, Token, tokenize

__version__ = "0.1.0"

__all__ = [
    "AttentionAdjustment",
    "AttentionTrace",
    "CharmEngine",
    "DenoiserWeights",
    "EngineConfig",
    "Explanation",
    "GeneratedImage",
    "InpaintRequest",
    "Mask",
    "ModelConfig",
    "ModifierCatalog",
    "ModifierEntry",
    "Prompt",
    "PromptRecord",
    "RefinementSuggestion",
    "RefinerConfig",
    "Session",
    "SessionStore",
    "SsimParams",
    "TextEncoder",
    "Token",
    "ToyDiffusionModel",
    "Version",
    "aggregate",
    "apply_adjustment",
    "build_model",
    "commit",
    "diff",
    "dissimilar",
    "inpaint",
    "load",
    "load_catalog",
    "load_corpus",
    "mine",
    "persist",
    "rasterize_strokes",
    "refine",
    "replay",
    "save_catalog",
    "search",
    "similar",
    "similar_tokens",
    "ssim",
    "tokenize",
    "validate",
]
