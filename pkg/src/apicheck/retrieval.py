"""Semantic retrieval of demonstrations and in-context prompt assembly.

The default embedder is a deterministic hashed bag-of-words (lowercased,
punctuation-split tokens, fixed dimension, L2-normalized) so cosine ranking
is fully reproducible without any neural model. Precomputed vectors can be
ingested from an embeddings file keyed by example id for offline parity with
a dense retriever.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np

from .topconvert import Example

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Embedder(Protocol):
    dimension: int
    keyed_by_id: bool

    def embed(self, text: str) -> np.ndarray: ...


class EmbeddingLookupError(KeyError):
    """Missing id in a precomputed embeddings table."""


class HashedBowEmbedder:
    """Hashed bag-of-words embedder; same text always maps to the same vector."""

    keyed_by_id = False

    def __init__(self, dimension: int = 1024):
        self.dimension = dimension

    def _index(self, token: str) -> int:
        digest = hashlib.sha1(token.encode("utf-8")).hexdigest()
        return int(digest, 16) % self.dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in _TOKEN_RE.findall(text.lower()):
            vec[self._index(token)] += 1.0
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


class PrecomputedEmbedder:
    """Vectors keyed by example id; embed() treats its input as an id."""

    keyed_by_id = True

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        if not vectors:
            raise ValueError("precomputed embedder needs at least one vector")
        dims = {len(v) for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent vector dimensions: {sorted(dims)}")
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        self.dimension = dims.pop()

    @classmethod
    def from_file(cls, path: str | Path) -> "PrecomputedEmbedder":
        return cls(load_embeddings(path))

    def embed(self, key: str) -> np.ndarray:
        try:
            return self.vectors[key]
        except KeyError:
            raise EmbeddingLookupError(f"no precomputed vector for id {key!r}") from None


def load_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read ``id<TAB>v1,v2,...,vD`` line records."""
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ValueError(f"{path}:{lineno}: expected id<TAB>values")
            key, _, values = line.partition("\t")
            try:
                out[key] = np.array([float(x) for x in values.split(",")], dtype=np.float64)
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: bad vector component") from e
    return out


def save_embeddings(vectors: Mapping[str, np.ndarray], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(vectors):
            fh.write(key + "\t" + ",".join(repr(float(x)) for x in vectors[key]) + "\n")


@dataclass(frozen=True)
class DemoIndex:
    entries: tuple[tuple[Example, np.ndarray], ...]
    dimension: int
    embedder: Embedder


def build_index(examples: list[Example], embedder: Embedder) -> DemoIndex:
    if not examples:
        raise ValueError("cannot build an index over zero examples")
    entries = []
    for ex in examples:
        key = ex.id if embedder.keyed_by_id else ex.utterance
        vec = embedder.embed(key)
        if len(vec) != embedder.dimension:
            raise ValueError(
                f"embedder dimension mismatch: {len(vec)} != {embedder.dimension}"
            )
        entries.append((ex, vec))
    return DemoIndex(tuple(entries), embedder.dimension, embedder)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def retrieve_scored(index: DemoIndex, utterance: str, k: int) -> list[tuple[Example, float]]:
    """Top-k entries by cosine similarity, most similar first; ties by ascending id."""
    if k <= 0:
        raise ValueError("k must be positive")
    query = index.embedder.embed(utterance)
    scored = [(ex, cosine_similarity(query, vec)) for ex, vec in index.entries]
    scored.sort(key=lambda pair: (-pair[1], pair[0].id))
    return scored[:k]


def retrieve(index: DemoIndex, utterance: str, k: int) -> list[Example]:
    return [ex for ex, _sim in retrieve_scored(index, utterance, k)]


def build_prompt(description: str, demos: list[Example], test_utterance: str) -> str:
    """Assemble the in-context learning prompt; layout is byte-stable.

    Demos are numbered ``Example 1..N`` in the order given (callers pass
    most-similar first); the test query is ``Example N+1`` and the prompt
    ends immediately after the final ``API Call:`` with no trailing output.
    """
    sections = [f"#[TASK DESCRIPTION]\n{description}"]
    if demos:
        blocks = []
        for i, demo in enumerate(demos, 1):
            if demo.api_call is None:
                raise ValueError(f"demo {demo.id!r} has no api_call")
            blocks.append(f"Example {i}:\nUser: {demo.utterance}\nAPI Call: {demo.api_call}")
        sections.append("#[IN-CONTEXT EXAMPLES]\n" + "\n\n".join(blocks))
    sections.append(
        f"#[TEST QUERY]\nExample {len(demos) + 1}:\nUser: {test_utterance}\nAPI Call:"
    )
    return "\n\n".join(sections)
