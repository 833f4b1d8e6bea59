"""Embedding fusion, visual projection, and late-interaction (MaxSim) scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import TEXT_DIM, VISUAL_DIM

DEFAULT_ALPHA = 0.7


@dataclass(frozen=True)
class FusedEmbedding:
    vector: np.ndarray  # 1024-dim
    alpha_used: float
    has_visual: bool

    def __post_init__(self):
        if self.vector.shape != (TEXT_DIM,):
            raise ValueError(f"fused vector must be {TEXT_DIM}-dim, got {self.vector.shape}")
        if not self.has_visual and self.alpha_used != 1.0:
            raise ValueError("text-only embedding must record alpha_used = 1.0")


@dataclass(frozen=True)
class ProjectionMatrix:
    entries: np.ndarray  # 1024 x 768, orthonormal columns
    seed: int


@dataclass(frozen=True)
class TokenEmbeddingSet:
    """Unit token vectors for one chunk, image, summary, or query."""

    owner: str
    vectors: np.ndarray  # (n, 1024), rows unit-norm
    modality: str = "text"  # text | visual | mixed

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise ValueError("token set must be a non-empty 2-d array")


def build_projection(seed: int) -> ProjectionMatrix:
    """Seeded Gaussian matrix with orthonormalized columns; deterministic in the seed."""
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((TEXT_DIM, VISUAL_DIM))
    q, r = np.linalg.qr(gauss)
    # Fix the sign ambiguity of QR so regeneration is exact.
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return ProjectionMatrix(entries=q * signs, seed=seed)


def project_visual(v: np.ndarray, projection: ProjectionMatrix) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (VISUAL_DIM,):
        raise ValueError(f"visual vector must be {VISUAL_DIM}-dim, got {v.shape}")
    return projection.entries @ v


def fuse(
    e_text: np.ndarray,
    e_visual_projected: Optional[np.ndarray],
    alpha: float = DEFAULT_ALPHA,
) -> FusedEmbedding:
    """Convex combination alpha * text + (1 - alpha) * visual; no renormalization."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0,1], got {alpha}")
    e_text = np.asarray(e_text, dtype=np.float64)
    if e_text.shape != (TEXT_DIM,):
        raise ValueError(f"text vector must be {TEXT_DIM}-dim, got {e_text.shape}")
    if e_visual_projected is None:
        return FusedEmbedding(vector=e_text, alpha_used=1.0, has_visual=False)
    e_vis = np.asarray(e_visual_projected, dtype=np.float64)
    if e_vis.shape != (TEXT_DIM,):
        raise ValueError(f"projected visual vector must be {TEXT_DIM}-dim, got {e_vis.shape}")
    return FusedEmbedding(
        vector=alpha * e_text + (1.0 - alpha) * e_vis, alpha_used=alpha, has_visual=True
    )


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def maxsim(query_tokens: TokenEmbeddingSet, doc_tokens: TokenEmbeddingSet) -> float:
    """Late-interaction score: sum over query tokens of the best cosine to any doc token."""
    q = query_tokens.vectors
    d = doc_tokens.vectors
    qn = np.linalg.norm(q, axis=1, keepdims=True)
    dn = np.linalg.norm(d, axis=1, keepdims=True)
    qn[qn == 0] = 1.0
    dn[dn == 0] = 1.0
    sims = (q / qn) @ (d / dn).T
    return float(np.sum(np.max(sims, axis=1)))


def unit_rows(vectors: Sequence[np.ndarray]) -> np.ndarray:
    arr = np.asarray(list(vectors), dtype=np.float64)
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return arr / norms


def token_set_for_text(owner: str, tokens: Sequence[str], provider, modality: str = "text") -> TokenEmbeddingSet:
    """Embed each distinct token (first-occurrence order) into a unit-vector set."""
    seen: List[str] = []
    for t in tokens:
        if t not in seen:
            seen.append(t)
    if not seen:
        raise ValueError(f"no tokens for {owner}")
    vecs = provider.embed_text(seen)
    return TokenEmbeddingSet(owner=owner, vectors=unit_rows(vecs), modality=modality)
