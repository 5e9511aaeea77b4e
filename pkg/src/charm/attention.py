"""Per-token scaling of cross-attention matrices.

The adjustment maps token index -> gamma. Scaling happens after softmax and
rows are not renormalized, so total attention mass genuinely shifts toward
or away from the adjusted tokens. Bounds are enforced only at validate();
the kernel itself accepts any real gamma so properties can be tested on the
full line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch, GammaOutOfRange, IndexOutOfRange
from .text import Prompt

GAMMA_MIN = 0.5
GAMMA_MAX = 2.0


@dataclass(frozen=True)
class AttentionAdjustment:
    """Immutable map of token index -> attention scale. Absent tokens mean 1."""

    entries: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "entries", {int(k): float(v) for k, v in self.entries.items()}
        )

    def __bool__(self) -> bool:
        return bool(self.entries)

    def is_identity(self) -> bool:
        return all(g == 1.0 for g in self.entries.values())

    def gamma(self, index: int) -> float:
        return self.entries.get(index, 1.0)

    def to_json(self) -> dict:
        return {"entries": {str(k): v for k, v in self.entries.items()}}

    @classmethod
    def from_json(cls, doc: Mapping) -> "AttentionAdjustment":
        return cls(entries={int(k): float(v) for k, v in doc.get("entries", {}).items()})

    @classmethod
    def for_tokens(cls, indices, gamma: float) -> "AttentionAdjustment":
        """Expand a multi-token selection into one entry per token."""
        return cls(entries={int(i): float(gamma) for i in indices})


def validate(adjustment: AttentionAdjustment, prompt: Prompt) -> None:
    """Check indices against the prompt and gammas against [0.5, 2.0]."""
    n = len(prompt.tokens)
    for index, gamma in adjustment.entries.items():
        if not 0 <= index < n:
            raise IndexOutOfRange(index, n)
        if not GAMMA_MIN <= gamma <= GAMMA_MAX:
            raise GammaOutOfRange(index, gamma)


def apply_adjustment(
    A: np.ndarray, adjustment: AttentionAdjustment, valid_len: int
) -> np.ndarray:
    """Scale column j of ``A`` by gamma_j for every adjusted token.

    Returns a new matrix; unadjusted columns and padding columns
    (>= valid_len) are bit-equal to the input. No renormalization.
    """
    if A.ndim != 2:
        raise DimensionMismatch(f"attention matrix must be 2-d, got shape {A.shape}")
    if not 0 <= valid_len <= A.shape[1]:
        raise DimensionMismatch(
            f"valid_len {valid_len} outside matrix with {A.shape[1]} columns"
        )
    scaled = A.copy()
    for index, gamma in adjustment.entries.items():
        if 0 <= index < valid_len:
            scaled[:, index] = A[:, index] * gamma
    return scaled
