"""Model backends behind the wire contract.

The "hash" backend is a deterministic, dependency-free stand-in: seeded
feature hashing for embeddings, byte-decoding for captions, truncation for
summaries, and a keyword vote for classification. Neural backends load the
configured model identifiers at startup and fail fast if they cannot.
"""

from __future__ import annotations

import hashlib
import re
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import TEXT_DIM, VISUAL_DIM
from .config import SidecarConfig

CLASSES = ("factual", "procedural", "analytical", "synthesized")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

_KEYWORDS: Dict[str, str] = {}
for _cls, _words in {
    "factual": ["what", "when", "where", "who", "which", "list", "location", "status"],
    "procedural": ["how", "shut", "turn", "install", "repair", "steps", "procedure",
                   "operate", "close"],
    "analytical": ["why", "analyze", "compare", "assess", "impact", "cause", "risk",
                   "evaluate"],
    "synthesized": ["plan", "strategy", "coordinate", "summarize", "overall", "across",
                    "prioritize", "allocate"],
}.items():
    for _w in _words:
        _KEYWORDS[_w] = _cls


def _tokens(text: str) -> List[str]:
    return _TOKEN_RE.findall(text)


def _hash_vector(text: str, dim: int, seed: int) -> List[float]:
    vec = np.zeros(dim, dtype=np.float64)
    for token in _tokens(text):
        digest = hashlib.blake2b(
            token.encode("utf-8"), digest_size=8,
            key=seed.to_bytes(8, "little", signed=True),
        ).digest()
        value = int.from_bytes(digest, "little")
        vec[(value >> 1) % dim] += 1.0 if value & 1 else -1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec /= norm
    return vec.tolist()


class HashBackend:
    """Deterministic reference backend; no model downloads required."""

    def __init__(self, config: SidecarConfig):
        self.seed = config.seed

    def embed_text(self, texts: Sequence[str]) -> List[List[float]]:
        return [_hash_vector(t, TEXT_DIM, self.seed) for t in texts]

    def embed_image(self, data: bytes) -> Tuple[str, List[float]]:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            text = ""
        if text.strip():
            caption = " ".join(_tokens(text)[:64])
        else:
            caption = f"image {hashlib.sha256(data).hexdigest()[:12]}"
        return caption, _hash_vector(caption, VISUAL_DIM, self.seed + 1)

    def summarize(self, texts: Sequence[str], budget: int) -> str:
        return " ".join(_tokens(" ".join(texts))[:budget])

    def classify(self, query: str) -> Dict[str, float]:
        counts = {c: 0 for c in CLASSES}
        for token in _tokens(query.lower()):
            cls = _KEYWORDS.get(token)
            if cls:
                counts[cls] += 1
        total = sum(counts.values())
        if total == 0:
            return {c: 0.25 for c in CLASSES}
        return {c: counts[c] / total for c in CLASSES}


class NeuralBackend(HashBackend):
    """Loads real models for whichever capabilities name one; the rest fall
    back to the deterministic implementations."""

    def __init__(self, config: SidecarConfig):
        super().__init__(config)
        self._text_model = None
        if config.embed_text_model != "hash":
            try:
                from sentence_transformers import SentenceTransformer

                self._text_model = SentenceTransformer(config.embed_text_model)
            except Exception as exc:  # startup error per contract
                raise RuntimeError(
                    f"failed to load text model {config.embed_text_model!r}: {exc}"
                ) from exc
            probe = self._text_model.encode(["dimension probe"])
            if probe.shape[1] != TEXT_DIM:
                raise RuntimeError(
                    f"text model emits {probe.shape[1]}-dim vectors, contract requires {TEXT_DIM}"
                )

    def embed_text(self, texts: Sequence[str]) -> List[List[float]]:
        if self._text_model is None:
            return super().embed_text(texts)
        return [v.tolist() for v in self._text_model.encode(list(texts))]


def make_backend(config: SidecarConfig):
    models = (config.embed_text_model, config.embed_image_model,
              config.summarize_model, config.classify_model)
    if all(m == "hash" for m in models):
        return HashBackend(config)
    return NeuralBackend(config)
