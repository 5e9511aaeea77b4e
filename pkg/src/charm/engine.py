"""Facade wiring the text encoder, diffusion model, catalog, refiner, and
session store into the interactive loop that the CLI and HTTP service drive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import session as sessions
from .attention import AttentionAdjustment, validate
from .catalog import (
    ModifierCatalog,
    PromptRecord,
    load_catalog,
    load_corpus,
)
from .diffusion import GeneratedImage, ModelConfig, ToyDiffusionModel
from .errors import BadConfig, ExternalUnavailable, UnknownVersion
from .explain import aggregate
from .inpaint import InpaintRequest, Mask, inpaint, rasterize_strokes
from .refine import RefinementSuggestion, RefinerConfig, refine
from .session import SessionStore, Version
from .text import TextEncoder, load_stopwords, tokenize


@dataclass(frozen=True)
class EngineConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    encoder_seed: int = 0
    session_dir: str = "sessions"
    catalog_path: str | None = None
    corpus_path: str | None = None
    stopwords_path: str | None = None
    refiner: RefinerConfig = field(default_factory=RefinerConfig)
    inpaint_strength: float = 0.8
    host: str = "127.0.0.1"
    port: int = 8765
    workers: int = 2

    def to_json(self) -> dict:
        doc = {
            "model": self.model.to_json(),
            "encoder_seed": self.encoder_seed,
            "session_dir": self.session_dir,
            "catalog_path": self.catalog_path,
            "corpus_path": self.corpus_path,
            "stopwords_path": self.stopwords_path,
            "refiner": {
                "strategy": self.refiner.strategy,
                "k_append": self.refiner.k_append,
                "external_endpoint": self.refiner.external_endpoint,
                "timeout": self.refiner.timeout,
            },
            "inpaint_strength": self.inpaint_strength,
            "host": self.host,
            "port": self.port,
            "workers": self.workers,
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "EngineConfig":
        try:
            kwargs = dict(doc)
            if "model" in kwargs:
                kwargs["model"] = ModelConfig.from_json(kwargs["model"])
            if "refiner" in kwargs:
                kwargs["refiner"] = RefinerConfig(**kwargs["refiner"])
            unknown = set(kwargs) - set(cls.__dataclass_fields__)
            if unknown:
                raise BadConfig(f"unknown config fields: {sorted(unknown)}")
            return cls(**kwargs)
        except (TypeError, ValueError, KeyError) as exc:
            raise BadConfig(f"invalid engine config: {exc}") from exc


def load_engine_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    return EngineConfig.from_json(doc)


class CharmEngine:
    """One process-wide bundle of immutable model state plus a session store.

    The model, encoder, and catalog never change after construction; all
    mutation is confined to the session store, which serializes writers per
    session. Independent generations are safe to run concurrently.
    """

    def __init__(self, config: EngineConfig):
        config.model.validate()
        self.config = config
        self.model = ToyDiffusionModel(config.model)
        stopwords = load_stopwords(config.stopwords_path) if config.stopwords_path else None
        self.stopwords = stopwords
        self.encoder = TextEncoder(seed=config.encoder_seed)
        self.catalog = (
            load_catalog(config.catalog_path)
            if config.catalog_path and Path(config.catalog_path).exists()
            else ModifierCatalog(entries=())
        )
        self.corpus: list[PromptRecord] = (
            load_corpus(config.corpus_path)
            if config.corpus_path and Path(config.corpus_path).exists()
            else []
        )
        self.store = SessionStore(config.session_dir)

    # ------------------------------------------------------------ generation

    def render(
        self,
        prompt: str,
        seed: int = 0,
        adjustment: AttentionAdjustment | None = None,
        trace: bool = True,
    ):
        """Generate an image (and optionally its explanation) without
        touching any session."""
        parsed = tokenize(prompt, self.stopwords)
        adjustment = adjustment or AttentionAdjustment()
        validate(adjustment, parsed)
        embedding, valid_len = self.encoder.encode(parsed)
        image, rec = self.model.generate(
            embedding, valid_len, seed, adjustment=adjustment, trace=trace, prompt=prompt
        )
        explanation = aggregate(rec, parsed, self.config.model) if rec else None
        return image, explanation

    def generate_version(
        self,
        session_id: str,
        prompt: str,
        seed: int = 0,
        adjustment: AttentionAdjustment | None = None,
        trace: bool = True,
        parent: int | None = None,
    ) -> Version:
        adjustment = adjustment or AttentionAdjustment()
        image, explanation = self.render(prompt, seed, adjustment, trace)
        kind = "adjust" if adjustment.entries else "diffuse"
        return self.store.commit(
            session_id,
            prompt=prompt,
            adjustment=adjustment,
            seed=seed,
            kind=kind,
            image_png=image.to_png(),
            explanation_chex=explanation.heatmaps_chex() if explanation else None,
            explanation=explanation.to_json() if explanation else None,
            parent=parent,
        )

    def inpaint_version(
        self,
        session_id: str,
        version_id: int,
        strokes: list[dict] | None = None,
        mask: Mask | None = None,
        prompt: str | None = None,
        seed: int = 0,
    ) -> Version:
        """Fork a version by regenerating only the brushed region."""
        session = self.store.get(session_id)
        source = session.get(version_id)
        source_image = GeneratedImage.from_png(session.blob(source.image_ref))
        if mask is None:
            mask = rasterize_strokes(
                strokes or [], self.config.model.img_h, self.config.model.img_w
            )
        request = InpaintRequest(
            image=source_image,
            mask=mask,
            inpaint_prompt=prompt,
            seed=seed,
            strength=self.config.inpaint_strength,
        )
        result = inpaint(self.model, self.encoder, request)
        return self.store.commit(
            session_id,
            prompt=prompt or "",
            adjustment=AttentionAdjustment(),
            seed=seed,
            kind="inpaint",
            image_png=result.to_png(),
            mask_png=mask.to_png(),
            parent=version_id,
            strength=request.strength,
        )

    # ------------------------------------------------------------ refinement

    def refine_prompt(self, prompt: str, fallback: bool = True) -> RefinementSuggestion:
        """Refine via the configured strategy; optionally fall back to the
        heuristic when the external model is unavailable."""
        try:
            return refine(prompt, self.catalog, self.config.refiner, self.encoder)
        except ExternalUnavailable:
            if not fallback or self.config.refiner.strategy == "heuristic":
                raise
            heuristic = replace(self.config.refiner, strategy="heuristic")
            return refine(prompt, self.catalog, heuristic, self.encoder)

    # ------------------------------------------------------------ versions

    def version_ref(self, session_id: str, version_id: int) -> str:
        return f"{session_id}-{version_id}"

    def resolve_ref(self, ref: str) -> tuple[sessions.Session, Version]:
        session_id, _, vid = ref.rpartition("-")
        if not session_id or not vid.isdigit():
            raise UnknownVersion(f"malformed version ref {ref!r}")
        session = self.store.get(session_id)
        return session, session.get(int(vid))
