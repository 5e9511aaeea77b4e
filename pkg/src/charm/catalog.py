"""Mine style modifiers from a prompt corpus and serve exploration queries.

Modifiers are 1- to 3-gram phrases of consecutive tokens counted per
occurrence across the corpus. Grams never cross punctuation tokens (corpus
prompts are comma-separated modifier lists, so cross-comma grams are
meaningless) and grams made only of stop words are dropped. Similarity
between phrases is cosine distance between their encoder embeddings.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chex import read_chex, write_chex
from .errors import EmptyPhrase, EmptyQuery
from .text import TextEncoder, Prompt, tokenize

DEFAULT_MIN_FREQ = 2
DEFAULT_TOP_K = 500
MAX_GRAM = 3


@dataclass(frozen=True)
class PromptRecord:
    id: str
    text: str
    image_path: str | None = None


@dataclass(frozen=True)
class ModifierEntry:
    phrase: str
    n: int
    frequency: int
    embedding: np.ndarray


@dataclass(frozen=True)
class ModifierCatalog:
    entries: tuple[ModifierEntry, ...]
    corpus_ref: str = ""

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, phrase: str) -> bool:
        return phrase in self.index

    @property
    def index(self) -> dict[str, ModifierEntry]:
        return {e.phrase: e for e in self.entries}

    def to_json(self) -> dict:
        return {
            "corpus_ref": self.corpus_ref,
            "entries": [
                {"phrase": e.phrase, "n": e.n, "frequency": e.frequency}
                for e in self.entries
            ],
        }


def _segments(prompt: Prompt):
    """Runs of consecutive word tokens, split at punctuation."""
    run = []
    for tok in prompt.tokens:
        if tok.is_punct:
            if run:
                yield run
            run = []
        else:
            run.append(tok)
    if run:
        yield run


def extract_grams(prompt: Prompt):
    """Yield (phrase, n) for every 1..3-gram inside punctuation-free runs,
    excluding grams whose tokens are all stop words."""
    for run in _segments(prompt):
        for n in range(1, MAX_GRAM + 1):
            for start in range(len(run) - n + 1):
                window = run[start : start + n]
                if all(t.is_stopword for t in window):
                    continue
                yield " ".join(t.text for t in window), n


def mine(
    corpus: list[PromptRecord],
    encoder: TextEncoder,
    stopwords: frozenset[str] | None = None,
    min_freq: int = DEFAULT_MIN_FREQ,
    top_k: int = DEFAULT_TOP_K,
    corpus_ref: str = "",
) -> ModifierCatalog:
    """Count n-grams across the corpus and keep the most frequent.

    Counting is per occurrence, so a phrase repeated inside one prompt
    counts every time. Output order is (frequency desc, phrase asc) and is
    independent of corpus record order.
    """
    counts: Counter[tuple[str, int]] = Counter()
    for record in corpus:
        counts.update(extract_grams(tokenize(record.text, stopwords)))
    kept = [(phrase, n, freq) for (phrase, n), freq in counts.items() if freq >= min_freq]
    kept.sort(key=lambda item: (-item[2], item[0]))
    kept = kept[:top_k]
    entries = tuple(
        ModifierEntry(phrase=p, n=n, frequency=f, embedding=encoder.embed_phrase(p))
        for p, n, f in kept
    )
    return ModifierCatalog(entries=entries, corpus_ref=corpus_ref)


def search(
    catalog: ModifierCatalog, corpus: list[PromptRecord], keywords: str
) -> list[PromptRecord]:
    """Prompts containing every keyword token, in any order.

    Ranked by the total number of keyword-token occurrences in the prompt
    (pure containment would rank all matches equally), then by id.
    """
    query = tokenize(keywords)
    if not query.tokens:
        raise EmptyQuery(f"query {keywords!r} tokenizes to nothing")
    wanted = set(query.texts)
    ranked = []
    for record in corpus:
        texts = tokenize(record.text).texts
        bag = Counter(texts)
        if all(bag[w] > 0 for w in wanted):
            ranked.append((-sum(bag[w] for w in wanted), record.id, record))
    ranked.sort(key=lambda item: item[:2])
    return [record for _, _, record in ranked]


def _normalize_phrase(phrase: str, encoder: TextEncoder) -> tuple[str, np.ndarray]:
    prompt = tokenize(phrase)
    if not prompt.tokens:
        raise EmptyPhrase(f"phrase {phrase!r} tokenizes to nothing")
    return " ".join(prompt.texts), encoder.embed_phrase(phrase)


def _cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    return float(1.0 - np.dot(a, b) / (na * nb))


def similar(
    catalog: ModifierCatalog, phrase: str, encoder: TextEncoder, k: int = 3
) -> list[ModifierEntry]:
    """The k entries closest in cosine distance, excluding the phrase itself."""
    normalized, vec = _normalize_phrase(phrase, encoder)
    candidates = [e for e in catalog.entries if e.phrase != normalized]
    candidates.sort(
        key=lambda e: (_cosine_distance(vec, e.embedding), -e.frequency, e.phrase)
    )
    return candidates[:k]


def dissimilar(
    catalog: ModifierCatalog, phrase: str, encoder: TextEncoder, k: int = 3
) -> list[ModifierEntry]:
    """The k entries farthest in cosine distance."""
    _, vec = _normalize_phrase(phrase, encoder)
    candidates = list(catalog.entries)
    candidates.sort(
        key=lambda e: (-_cosine_distance(vec, e.embedding), -e.frequency, e.phrase)
    )
    return candidates[:k]


# ----------------------------------------------------------------- corpus io


def load_corpus(path: str | Path) -> list[PromptRecord]:
    """Read a corpus file: CSV with id,text[,image_path] columns, or plain
    newline-delimited prompts (ids are line positions). Record ids must be
    unique within the corpus."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        records = [
            PromptRecord(
                id=str(r["id"]),
                text=r["text"],
                image_path=r.get("image_path") or None,
            )
            for r in rows
        ]
        seen = Counter(r.id for r in records)
        duplicates = [record_id for record_id, count in seen.items() if count > 1]
        if duplicates:
            raise ValueError(f"duplicate corpus ids: {duplicates[:5]}")
        return records
    records = []
    for i, line in enumerate(path.read_text("utf-8").splitlines()):
        if line.strip():
            records.append(PromptRecord(id=str(i), text=line.strip()))
    return records


# ---------------------------------------------------------------- catalog io


def save_catalog(catalog: ModifierCatalog, json_path: str | Path) -> None:
    """Write the catalog JSON plus an embedding sidecar next to it."""
    json_path = Path(json_path)
    json_path.write_text(json.dumps(catalog.to_json(), indent=2), encoding="utf-8")
    if catalog.entries:
        maps = np.stack([e.embedding for e in catalog.entries])[:, None, :]
    else:
        maps = np.zeros((0, 0, 0))
    json_path.with_suffix(".chex").write_bytes(write_chex(maps))


def load_catalog(json_path: str | Path) -> ModifierCatalog:
    json_path = Path(json_path)
    doc = json.loads(json_path.read_text("utf-8"))
    maps = read_chex(json_path.with_suffix(".chex").read_bytes())
    entries = tuple(
        ModifierEntry(
            phrase=e["phrase"],
            n=e["n"],
            frequency=e["frequency"],
            embedding=maps[i, 0].astype(np.float64),
        )
        for i, e in enumerate(doc["entries"])
    )
    return ModifierCatalog(entries=entries, corpus_ref=doc.get("corpus_ref", ""))
