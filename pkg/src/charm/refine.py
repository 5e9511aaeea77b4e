"""Automated prompt refinement behind a pluggable strategy.

The heuristic default keeps the prompt verbatim and appends frequent
catalog modifiers, greedily skipping near-duplicates so suggested styles
stay diverse. The external strategy delegates to an HTTP model that speaks
``{"prompt": ...} -> {"refined": ...}`` and must preserve the original
prompt as a prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx
import numpy as np

from .catalog import ModifierCatalog
from .errors import EmptyPrompt, ExternalUnavailable
from .text import TextEncoder, tokenize

NEAR_DUPLICATE_COS = 0.95


@dataclass(frozen=True)
class RefinementSuggestion:
    refined: str
    appended: tuple[str, ...]
    source: str  # "heuristic" | "external"


@dataclass(frozen=True)
class RefinerConfig:
    strategy: str = "heuristic"
    k_append: int = 4
    external_endpoint: str | None = None
    timeout: float = 10.0

    def __post_init__(self):
        if self.k_append < 0:
            raise ValueError("k_append must be >= 0")


def _contains_phrase(prompt_texts: list[str], phrase_texts: list[str]) -> bool:
    """Contiguous token-subsequence containment."""
    n = len(phrase_texts)
    return any(
        prompt_texts[i : i + n] == phrase_texts
        for i in range(len(prompt_texts) - n + 1)
    )


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def refine(
    prompt: str,
    catalog: ModifierCatalog,
    config: RefinerConfig,
    encoder: TextEncoder | None = None,
) -> RefinementSuggestion:
    """Produce a refined prompt that starts with the original verbatim."""
    if not prompt.strip():
        raise EmptyPrompt("cannot refine an empty prompt")
    if config.strategy == "external":
        return _refine_external(prompt, config)
    return _refine_heuristic(prompt, catalog, config)


def _refine_heuristic(
    prompt: str, catalog: ModifierCatalog, config: RefinerConfig
) -> RefinementSuggestion:
    prompt_texts = tokenize(prompt).texts
    chosen: list = []
    for entry in catalog.entries:  # already (frequency desc, phrase asc)
        if len(chosen) >= config.k_append:
            break
        phrase_texts = entry.phrase.split(" ")
        if _contains_phrase(prompt_texts, phrase_texts):
            continue
        if any(_cos(entry.embedding, c.embedding) > NEAR_DUPLICATE_COS for c in chosen):
            continue
        chosen.append(entry)
    phrases = tuple(e.phrase for e in chosen)
    refined = prompt if not phrases else prompt + ", " + ", ".join(phrases)
    return RefinementSuggestion(refined=refined, appended=phrases, source="heuristic")


def _refine_external(prompt: str, config: RefinerConfig) -> RefinementSuggestion:
    if not config.external_endpoint:
        raise ExternalUnavailable("no external endpoint configured")
    try:
        response = httpx.post(
            config.external_endpoint,
            json={"prompt": prompt},
            timeout=config.timeout,
        )
    except httpx.HTTPError as exc:
        raise ExternalUnavailable(f"external refiner unreachable: {exc}") from exc
    if response.status_code != 200:
        raise ExternalUnavailable(f"external refiner returned {response.status_code}")
    try:
        refined = response.json()["refined"]
    except Exception as exc:
        raise ExternalUnavailable("external refiner response missing 'refined'") from exc
    if not isinstance(refined, str) or not refined.startswith(prompt):
        # Contract: the original intent must survive as a verbatim prefix.
        raise ExternalUnavailable("external refiner did not preserve the prompt prefix")
    return RefinementSuggestion(refined=refined, appended=(), source="external")
