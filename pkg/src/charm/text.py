"""Tokenization and deterministic text embeddings.

The encoder stands in for a learned text encoder: every token gets a
pseudo-random vector keyed by (token text, encoder seed), so embeddings are
exactly reproducible and carry no semantics. Downstream attention math,
explanations, and similarity queries only need determinism and geometry.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EmptyPhrase, TooLong

N_MAX = 77
D_TEXT = 64

# A word run, or any single character that is neither word nor whitespace.
# Each punctuation mark becomes its own token.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


_WORD_RE = re.compile(r"\w+$", re.UNICODE)


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    span: tuple[int, int]  # byte offsets into the raw prompt's UTF-8 encoding
    is_stopword: bool

    @property
    def is_punct(self) -> bool:
        return _WORD_RE.fullmatch(self.text) is None


@dataclass(frozen=True)
class Prompt:
    raw: str
    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load the stop-word list, one lowercase word per line.

    Defaults to the list bundled with the package.
    """
    if path is None:
        data = resources.files("charm").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        data = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in data.splitlines() if w.strip())


_BUNDLED_STOPWORDS = None


def bundled_stopwords() -> frozenset[str]:
    global _BUNDLED_STOPWORDS
    if _BUNDLED_STOPWORDS is None:
        _BUNDLED_STOPWORDS = load_stopwords()
    return _BUNDLED_STOPWORDS


def tokenize(raw: str, stopwords: frozenset[str] | None = None) -> Prompt:
    """Split ``raw`` into lowercase word and punctuation tokens.

    Spans are byte offsets into the UTF-8 encoding of ``raw`` and are
    strictly increasing. Raises TooLong past N_MAX tokens.
    """
    if stopwords is None:
        stopwords = bundled_stopwords()
    # Byte offset of each character prefix, so char spans map to byte spans.
    byte_at = np.zeros(len(raw) + 1, dtype=np.int64)
    for i, ch in enumerate(raw):
        byte_at[i + 1] = byte_at[i] + len(ch.encode("utf-8"))
    tokens = []
    for m in _TOKEN_RE.finditer(raw):
        text = m.group().lower()
        tokens.append(
            Token(
                index=len(tokens),
                text=text,
                span=(int(byte_at[m.start()]), int(byte_at[m.end()])),
                is_stopword=text in stopwords,
            )
        )
    if len(tokens) > N_MAX:
        raise TooLong(f"{len(tokens)} tokens exceeds the limit of {N_MAX}")
    return Prompt(raw=raw, tokens=tuple(tokens))


def _sinusoidal(position: int, dim: int) -> np.ndarray:
    """Transformer-style fixed positional encoding for a single position."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    angles = position * freqs
    enc = np.zeros(dim)
    enc[0::2] = np.sin(angles)
    enc[1::2] = np.cos(angles)
    return enc


class TextEncoder:
    """Deterministic stand-in for a diffusion model's text encoder.

    All state is fixed at construction; every method is a pure function of
    its arguments, so instances are safe to share across threads.
    """

    def __init__(self, seed: int = 0, dim: int = D_TEXT, max_tokens: int = N_MAX):
        self.seed = int(seed)
        self.dim = int(dim)
        self.max_tokens = int(max_tokens)
        self._positional = np.stack([_sinusoidal(p, self.dim) for p in range(self.max_tokens)])

    def token_embedding(self, text: str) -> np.ndarray:
        """Position-free base embedding for one token text."""
        digest = hashlib.blake2b(
            f"{self.seed}\x00{text}".encode("utf-8"), digest_size=8
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        return rng.standard_normal(self.dim)

    def encode(self, prompt: Prompt) -> tuple[np.ndarray, int]:
        """Embed a prompt into an (N_MAX, dim) matrix.

        Row j is the token embedding plus the sinusoidal positional term;
        rows past the prompt length are exactly zero. Returns the matrix and
        the number of valid rows.
        """
        matrix = np.zeros((self.max_tokens, self.dim))
        for tok in prompt.tokens:
            matrix[tok.index] = self.token_embedding(tok.text) + self._positional[tok.index]
        return matrix, len(prompt.tokens)

    def embed_phrase(self, phrase: str) -> np.ndarray:
        """Mean of the phrase's base token embeddings (no positional term)."""
        prompt = tokenize(phrase)
        if not prompt.tokens:
            raise EmptyPhrase(f"no tokens survive tokenization of {phrase!r}")
        vecs = [self.token_embedding(t.text) for t in prompt.tokens]
        return np.mean(vecs, axis=0)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 if either is zero."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
