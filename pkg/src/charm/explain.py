"""Aggregate traced cross-attention into per-token heatmaps and saliencies.

For each prompt token the raw (pre-adjustment) attention columns are summed
over every step, layer, and head, reshaped to the latent grid, and
bilinearly upsampled to image resolution. Maps are normalized jointly by
the global maximum so relative strength between tokens is preserved, which
is what the token-coloring UI encodes. Saliency is the mean heatmap mass,
max-normalized across tokens.

Token correlation is cosine similarity over the aggregated contribution
vectors, a stand-in for activation-level analyses that need model internals
a toy backbone does not have.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chex import read_chex, write_chex
from .diffusion import AttentionTrace, ModelConfig, UPSAMPLE
from .errors import IncompleteTrace, IndexOutOfRange
from .text import Prompt, cosine_similarity

DEFAULT_TAU = 0.7


@dataclass(frozen=True)
class TokenHeatmap:
    token_index: int
    map: np.ndarray  # (img_h, img_w), non-negative


@dataclass(frozen=True)
class TokenSaliency:
    token_index: int
    value: float


@dataclass(frozen=True)
class Explanation:
    heatmaps: tuple[TokenHeatmap, ...]
    saliencies: tuple[TokenSaliency, ...]
    contribution_vectors: np.ndarray  # (n_tokens, img_h * img_w), pre-normalization
    token_texts: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.heatmaps)

    def contribution_is_zero(self, token_index: int) -> bool:
        self._check_index(token_index)
        return not np.any(self.contribution_vectors[token_index])

    def _check_index(self, token_index: int) -> None:
        if not 0 <= token_index < len(self.heatmaps):
            raise IndexOutOfRange(token_index, len(self.heatmaps))

    def saliency_values(self) -> list[float]:
        return [s.value for s in self.saliencies]

    def to_json(self, tau: float = DEFAULT_TAU) -> dict:
        return {
            "tokens": list(self.token_texts),
            "saliencies": self.saliency_values(),
            "similar_tokens": [
                sorted(similar_tokens(self, j, tau)) for j in range(len(self))
            ],
            "zero_contribution": [
                self.contribution_is_zero(j) for j in range(len(self))
            ],
            "tau": tau,
        }

    def heatmaps_chex(self) -> bytes:
        if not self.heatmaps:
            return write_chex(np.zeros((0, 0, 0)))
        return write_chex(np.stack([h.map for h in self.heatmaps]))


def bilinear_upsample(grid: np.ndarray, scale: int = UPSAMPLE) -> np.ndarray:
    """Upsample a 2-d grid by ``scale`` with bilinear interpolation.

    Output pixel centers are sampled at (i + 0.5) / scale - 0.5 in input
    coordinates (half-pixel convention), clamped at the borders.
    """
    h, w = grid.shape
    out_y = (np.arange(h * scale) + 0.5) / scale - 0.5
    out_x = (np.arange(w * scale) + 0.5) / scale - 0.5
    y0 = np.clip(np.floor(out_y), 0, h - 1).astype(int)
    x0 = np.clip(np.floor(out_x), 0, w - 1).astype(int)
    y1 = np.clip(y0 + 1, 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    wy = np.clip(out_y - y0, 0.0, 1.0)[:, None]
    wx = np.clip(out_x - x0, 0.0, 1.0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - wx) + grid[np.ix_(y0, x1)] * wx
    bot = grid[np.ix_(y1, x0)] * (1 - wx) + grid[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def aggregate(trace: AttentionTrace, prompt: Prompt, config: ModelConfig) -> Explanation:
    """Build per-token heatmaps and saliencies from a complete trace.

    Uses the pre-adjustment matrices, so the explanation shows where raw
    attention fell even for an adjusted generation. Padding tokens never
    appear: there is exactly one entry per prompt token.
    """
    if not trace.is_complete():
        missing = [k for k in trace.keys() if k not in trace.pre][:3]
        raise IncompleteTrace(f"trace missing records, e.g. {missing}")
    n = len(prompt.tokens)
    img_shape = (config.img_h, config.img_w)
    if n == 0:
        return Explanation(
            heatmaps=(),
            saliencies=(),
            contribution_vectors=np.zeros((0, img_shape[0] * img_shape[1])),
            token_texts=(),
        )

    total = np.zeros_like(next(iter(trace.pre.values())))
    for key in trace.keys():
        total += trace.pre[key]

    raw_maps = np.empty((n, *img_shape))
    for j in range(n):
        grid = total[:, j].reshape(config.latent_h, config.latent_w)
        raw_maps[j] = bilinear_upsample(grid, UPSAMPLE)

    global_max = raw_maps.max()
    maps = raw_maps / global_max if global_max > 0 else raw_maps.copy()

    means = maps.reshape(n, -1).mean(axis=1)
    top = means.max()
    saliency = means / top if top > 0 else means

    return Explanation(
        heatmaps=tuple(TokenHeatmap(j, maps[j]) for j in range(n)),
        saliencies=tuple(TokenSaliency(j, float(saliency[j])) for j in range(n)),
        contribution_vectors=raw_maps.reshape(n, -1),
        token_texts=tuple(prompt.texts),
    )


def similar_tokens(
    explanation: Explanation, token_index: int, tau: float = DEFAULT_TAU
) -> set[int]:
    """Indices of other tokens whose contributions align with the query.

    A query token with zero contribution yields the empty set; callers can
    distinguish that case via ``explanation.contribution_is_zero``.
    """
    explanation._check_index(token_index)
    query = explanation.contribution_vectors[token_index]
    if not np.any(query):
        return set()
    result = set()
    for j in range(len(explanation)):
        if j == token_index:
            continue
        if cosine_similarity(query, explanation.contribution_vectors[j]) >= tau:
            result.add(j)
    return result


def explanation_from_parts(
    heatmap_bytes: bytes, doc: dict
) -> tuple[np.ndarray, dict]:
    """Decode a stored explanation (CHEX heatmaps + JSON sidecar)."""
    return read_chex(heatmap_bytes), doc
