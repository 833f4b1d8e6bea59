"""Query orchestration: routing, strategy execution, trace records, feedback."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

from .controller import (
    PhaseProfile,
    RoutingTrace,
    StrategyState,
    route,
    update,
)
from .corpus import tokenize
from .embedding import FusedEmbedding, TokenEmbeddingSet, fuse, token_set_for_text
from .index_store import IndexStore
from .retrieval import (
    RetrievalResult,
    assemble_response,
    direct_search,
    hierarchical_traversal,
    multimodal_fusion,
)
from .tree import Tree


def query_id_for(query: str, phase: str) -> str:
    return "q" + hashlib.sha256(f"{phase}\x00{query}".encode()).hexdigest()[:12]


@dataclass
class QueryOutcome:
    query_id: str
    result: RetrievalResult
    response: str
    routing: Optional[RoutingTrace]
    overridden: bool


def embed_query(query: str, provider) -> tuple[FusedEmbedding, TokenEmbeddingSet]:
    vec = provider.embed_text([query])[0]
    tokens = tokenize(query)
    token_set = token_set_for_text("query", tokens if tokens else [query], provider)
    return fuse(vec, None, 1.0), token_set


def execute_strategy(
    strategy: str,
    query: str,
    tree: Tree,
    provider,
    beam: int,
    top_k: int,
) -> RetrievalResult:
    query_emb, query_tokens = embed_query(query, provider)
    if strategy == "DirectSearch":
        return direct_search(query_emb, tree, top_k)
    if strategy == "HierarchicalTraversal":
        return hierarchical_traversal(query_emb, tree, beam, top_k)
    if strategy == "MultimodalFusion":
        return multimodal_fusion(query_tokens, query_emb, tree, top_k)
    raise ValueError(f"unknown strategy {strategy!r}")


def run_query(
    store: IndexStore,
    tree: Tree,
    query: str,
    phase: str = "rescue",
    strategy_override: Optional[str] = None,
    context_tags: Sequence[str] = (),
    provider=None,
    top_k: Optional[int] = None,
    record_trace: bool = True,
) -> QueryOutcome:
    provider = provider or store.config.make_provider()
    profile = PhaseProfile.for_phase(phase, store.config.phase_priors)
    state = store.load_state()
    routing: Optional[RoutingTrace] = None
    if strategy_override is None:
        routing = route(query, context_tags, state, profile, provider)
        strategy = routing.strategy
    else:
        strategy = strategy_override
        routing = route(query, context_tags, state, profile, provider)
    result = execute_strategy(
        strategy if strategy_override is None else strategy_override,
        query,
        tree,
        provider,
        store.config.beam,
        top_k or store.config.top_k,
    )
    result.band = routing.band
    result.entropy = routing.entropy
    response = assemble_response(result, profile) if result.items else ""
    qid = query_id_for(query, phase)
    if record_trace:
        store.append_trace(
            {
                "query_id": qid,
                "query": query,
                "phase": phase,
                "distribution": list(routing.distribution.as_tuple()),
                "entropy": routing.entropy,
                "band": routing.band,
                "strategy": strategy,
                "overridden": strategy_override is not None,
                "items": [
                    {"node_id": i.node_id, "score": i.score, "level": i.level}
                    for i in result.items
                ],
            }
        )
    return QueryOutcome(
        query_id=qid,
        result=result,
        response=response,
        routing=routing,
        overridden=strategy_override is not None,
    )


def apply_feedback(store: IndexStore, query_id: str, reward: float) -> StrategyState:
    """EMA-update the (band, strategy) cell recorded in the query's trace."""
    trace = store.find_trace(query_id)
    if trace is None:
        raise ValueError(f"unknown query_id {query_id!r}; run the query first")
    state = store.load_state()
    state = update(state, trace["band"], trace["strategy"], reward)
    store.save_state(state)
    return state
