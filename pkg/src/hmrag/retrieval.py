"""The three retrieval strategies and extractive response assembly."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .controller import PhaseProfile
from .corpus import tokenize
from .embedding import FusedEmbedding, TokenEmbeddingSet, cosine, maxsim
from .tree import Tree, TreeNode, resolve_token_set

RRF_CONSTANT = 60
CANDIDATE_FACTOR = 4
SNIPPET_TOKENS = 30


@dataclass(frozen=True)
class ResultItem:
    node_id: str
    score: float
    level: int
    modality_tags: List[str]
    snippet: str


@dataclass
class RetrievalResult:
    items: List[ResultItem]
    strategy: str
    band: Optional[str] = None
    entropy: Optional[float] = None
    timing_ms: float = 0.0


def _snippet(node: TreeNode) -> str:
    return " ".join(tokenize(node.summary_text)[:SNIPPET_TOKENS])


def _modality_tags(node: TreeNode) -> List[str]:
    tags = ["text"]
    if node.embedding.has_visual:
        tags.append("visual")
    return tags


def _item(node: TreeNode, score: float) -> ResultItem:
    return ResultItem(
        node_id=node.node_id,
        score=score,
        level=node.level,
        modality_tags=_modality_tags(node),
        snippet=_snippet(node),
    )


def _ranked(nodes: Sequence[TreeNode], query_vec, top_k: int) -> List[ResultItem]:
    scored = [(node, cosine(query_vec, node.embedding.vector)) for node in nodes]
    scored.sort(key=lambda pair: (-pair[1], pair[0].node_id))
    return [_item(node, score) for node, score in scored[:top_k]]


def direct_search(query_embedding: FusedEmbedding, tree: Tree, top_k: int) -> RetrievalResult:
    """Exact cosine kNN over leaf fused embeddings; summary nodes excluded."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    leaves = [n for n in tree.nodes.values() if n.level == 0]
    if not leaves:
        raise ValueError("index has no leaves")
    start = time.perf_counter()
    items = _ranked(leaves, query_embedding.vector, top_k)
    return RetrievalResult(
        items=items, strategy="DirectSearch", timing_ms=(time.perf_counter() - start) * 1e3
    )


def hierarchical_traversal(
    query_embedding: FusedEmbedding, tree: Tree, beam: int, top_k: int
) -> RetrievalResult:
    """Beam search from the root; visited summaries and reached leaves compete
    in the final cosine ranking."""
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    start = time.perf_counter()
    qv = query_embedding.vector
    visited: Dict[str, TreeNode] = {}
    frontier = [tree.nodes[tree.root_id]]
    while frontier:
        for node in frontier:
            visited[node.node_id] = node
        scored = [(cosine(qv, n.embedding.vector), n) for n in frontier]
        scored.sort(key=lambda pair: (-pair[0], pair[1].node_id))
        kept = [n for _, n in scored[:beam]]
        frontier = [tree.nodes[cid] for n in kept for cid in n.children]
    items = _ranked(list(visited.values()), qv, top_k)
    return RetrievalResult(
        items=items,
        strategy="HierarchicalTraversal",
        timing_ms=(time.perf_counter() - start) * 1e3,
    )


def rrf_fuse(rankings: Sequence[Sequence[str]], constant: int = RRF_CONSTANT) -> List[tuple]:
    """Reciprocal-rank fusion; returns (node_id, score) sorted by score desc, id asc."""
    scores: Dict[str, float] = {}
    for ranking in rankings:
        for rank, node_id in enumerate(ranking, start=1):
            scores[node_id] = scores.get(node_id, 0.0) + 1.0 / (constant + rank)
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def multimodal_fusion(
    query_tokens: TokenEmbeddingSet,
    query_embedding: FusedEmbedding,
    tree: Tree,
    top_k: int,
) -> RetrievalResult:
    """Cosine candidate generation, MaxSim re-ranking over text+visual token
    sets, and reciprocal-rank fusion of the two orders."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    start = time.perf_counter()
    candidates = direct_search(query_embedding, tree, CANDIDATE_FACTOR * top_k).items
    cosine_order = [item.node_id for item in candidates]
    maxsim_scores = {
        item.node_id: maxsim(query_tokens, resolve_token_set(tree.nodes[item.node_id]))
        for item in candidates
    }
    maxsim_order = sorted(cosine_order, key=lambda nid: (-maxsim_scores[nid], nid))
    fused = rrf_fuse([cosine_order, maxsim_order])[:top_k]
    items = [_item(tree.nodes[nid], score) for nid, score in fused]
    return RetrievalResult(
        items=items,
        strategy="MultimodalFusion",
        timing_ms=(time.perf_counter() - start) * 1e3,
    )


def assemble_response(
    result: RetrievalResult, phase: PhaseProfile, generator=None
) -> str:
    """Extractive response formatted per the phase response style; every line
    cites the node it came from."""
    if not result.items:
        raise ValueError("cannot assemble a response from an empty result")
    if generator is not None:
        ids = [item.node_id for item in result.items]
        text = generator.summarize([item.snippet for item in result.items], 256)
        return text + "\nSources: " + " ".join(f"[{i}]" for i in ids)
    style = phase.response_style
    lines: List[str] = []
    if style == "concise_procedural":
        for i, item in enumerate(result.items, start=1):
            lines.append(f"{i}. {item.snippet} [{item.node_id}]")
    elif style == "synthesized_planning":
        by_doc: Dict[str, List] = {}
        for item in result.items:
            doc = item.node_id.split("-p")[0] if "-p" in item.node_id else "summary"
            by_doc.setdefault(doc, []).append(item)
        for doc in sorted(by_doc):
            lines.append(f"## {doc}")
            for item in by_doc[doc]:
                lines.append(f"- {item.snippet} [{item.node_id}]")
    else:  # analytical
        for item in result.items:
            lines.append(f"* {item.snippet} [{item.node_id}]")
    return "\n".join(lines)


def citations_of(response: str) -> List[str]:
    import re

    return re.findall(r"\[([^\[\]]+)\]", response)
