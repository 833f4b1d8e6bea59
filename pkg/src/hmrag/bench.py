"""Benchmark matrix: configurations over a query set with graded judgments.

The matrix crosses visual fusion (on/off) with routing (agentic entropy
routing vs fixed DirectSearch). Reports are written as a TSV table, a JSON
file, and rendered figures.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .config import EngineConfig
from .corpus import tokenize
from .engine import run_query
from .index_store import IndexStore, ingest
from .metrics import JudgmentSet, load_judgments, ndcg, set_f1, normalize_label
from .plots import plot_metric_bars, plot_scaling
from .retrieval import citations_of
from .synth import SynthSpec, generate

DECOMPOSITION_ITEMS = 3
DECOMPOSITION_LABEL_TOKENS = 4


@dataclass
class Variant:
    name: str
    store: IndexStore
    agentic: bool


@dataclass
class ConfigCell:
    ndcg_mean: float
    sga: float
    tda: float
    evaluated: int
    skipped: int
    per_phase_ndcg: Dict[str, float]


@dataclass
class BenchmarkReport:
    cells: Dict[str, ConfigCell]
    traces: List[dict] = field(default_factory=list)


def load_queries(path: str | Path) -> List[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def decomposition_labels(items) -> List[str]:
    labels = []
    for item in items[:DECOMPOSITION_ITEMS]:
        label = " ".join(tokenize(item.snippet)[:DECOMPOSITION_LABEL_TOKENS])
        if label:
            labels.append(label)
    return labels


def run_benchmark(
    variants: Sequence[Variant],
    queries: Sequence[dict],
    judgments: JudgmentSet,
    top_k: int = 10,
) -> BenchmarkReport:
    cells: Dict[str, ConfigCell] = {}
    traces: List[dict] = []
    for variant in variants:
        tree = variant.store.load_tree()
        provider = variant.store.config.make_provider()
        ndcgs: List[float] = []
        phase_scores: Dict[str, List[float]] = {}
        grounded = 0
        decomposed = 0
        evaluated = 0
        skipped = 0
        for q in queries:
            qid = q["query_id"]
            rel = judgments.relevance.get(qid)
            if not rel or max(rel.values()) <= 0:
                skipped += 1
                continue
            outcome = run_query(
                variant.store,
                tree,
                q["text"],
                phase=q.get("phase", "rescue"),
                strategy_override=None if variant.agentic else "DirectSearch",
                provider=provider,
                top_k=top_k,
                record_trace=False,
            )
            ranking = [item.node_id for item in outcome.result.items]
            score = ndcg(ranking, rel, top_k)
            ndcgs.append(score)
            phase_scores.setdefault(q.get("phase", "rescue"), []).append(score)
            gold = judgments.gold_evidence.get(qid, set())
            cited = set(citations_of(outcome.response))
            if gold and (cited & gold):
                grounded += 1
            gold_tasks = judgments.gold_subtasks.get(qid, set())
            predicted = {normalize_label(l) for l in decomposition_labels(outcome.result.items)}
            if gold_tasks and set_f1(predicted, gold_tasks) >= 0.5:
                decomposed += 1
            evaluated += 1
            traces.append(
                {
                    "config": variant.name,
                    "query_id": qid,
                    "strategy": outcome.result.strategy,
                    "band": outcome.result.band,
                    "ndcg": score,
                }
            )
        cells[variant.name] = ConfigCell(
            ndcg_mean=sum(ndcgs) / evaluated if evaluated else 0.0,
            sga=grounded / evaluated if evaluated else 0.0,
            tda=decomposed / evaluated if evaluated else 0.0,
            evaluated=evaluated,
            skipped=skipped,
            per_phase_ndcg={
                phase: sum(vals) / len(vals) for phase, vals in sorted(phase_scores.items())
            },
        )
    return BenchmarkReport(cells=cells, traces=traces)


def build_variant_indexes(
    manifest: str | Path,
    workdir: str | Path,
    base_config: EngineConfig,
    matrix: Optional[Sequence[str]] = None,
) -> List[Variant]:
    """Ingest+build one index per fusion setting and wrap the routing axis."""
    workdir = Path(workdir)
    matrix = list(matrix or ["full", "multimodal_fixed", "text_only", "text_only_fixed"])
    stores: Dict[bool, IndexStore] = {}
    variants: List[Variant] = []
    for name in matrix:
        use_visual = not name.startswith("text_only")
        if use_visual not in stores:
            cfg = EngineConfig.from_dict(base_config.to_dict())
            cfg.multimodal = use_visual
            idx_dir = workdir / ("index_mm" if use_visual else "index_text")
            ingest(manifest, idx_dir, cfg, force=True)
            store = IndexStore(idx_dir)
            store.build()
            stores[use_visual] = IndexStore(idx_dir)
        variants.append(
            Variant(name=name, store=stores[use_visual], agentic="fixed" not in name)
        )
    return variants


def write_report(report: BenchmarkReport, out_dir: str | Path) -> Dict[str, Path]:
    """TSV table + JSON + metric figure; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tsv = out_dir / "report.tsv"
    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("config\tndcg\tsga\ttda\tevaluated\tskipped\n")
        for name, cell in report.cells.items():
            fh.write(
                f"{name}\t{cell.ndcg_mean:.6f}\t{cell.sga:.6f}\t{cell.tda:.6f}"
                f"\t{cell.evaluated}\t{cell.skipped}\n"
            )
    js = out_dir / "report.json"
    js.write_text(
        json.dumps(
            {
                "cells": {
                    name: {
                        "ndcg": cell.ndcg_mean,
                        "sga": cell.sga,
                        "tda": cell.tda,
                        "evaluated": cell.evaluated,
                        "skipped": cell.skipped,
                        "per_phase_ndcg": cell.per_phase_ndcg,
                    }
                    for name, cell in report.cells.items()
                },
                "traces": report.traces,
            },
            sort_keys=True,
            indent=2,
        )
    )
    fig = plot_metric_bars(
        {
            name: {"ndcg": cell.ndcg_mean, "sga": cell.sga, "tda": cell.tda}
            for name, cell in report.cells.items()
        },
        out_dir / "metrics.png",
    )
    return {"tsv": tsv, "json": js, "figure": fig}


def scaling_probe(
    workdir: str | Path,
    sizes: Sequence[int] = (2000, 3000),
    seed: int = 0,
    queries_per_size: int = 10,
) -> Dict[str, object]:
    """Build synthetic corpora at the given chunk counts and time build/query."""
    workdir = Path(workdir)
    build_times: List[float] = []
    query_times: List[float] = []
    for size in sizes:
        spec = SynthSpec(
            seed=seed,
            docs=4,
            pages_per_doc=size // 4,
            tokens_per_page=120,
            image_density=0.0,
            topics=4,
            n_queries=queries_per_size,
            image_query_fraction=0.0,
        )
        corpus_dir = workdir / f"corpus_{size}"
        paths = generate(spec, corpus_dir)
        cfg = EngineConfig(seed=seed)
        start = time.perf_counter()
        idx_dir = workdir / f"index_{size}"
        ingest(paths["manifest"], idx_dir, cfg, force=True)
        store = IndexStore(idx_dir)
        store.build()
        build_times.append(time.perf_counter() - start)
        store = IndexStore(idx_dir)
        tree = store.load_tree()
        provider = cfg.make_provider()
        queries = load_queries(paths["queries"])[:queries_per_size]
        start = time.perf_counter()
        for q in queries:
            run_query(store, tree, q["text"], provider=provider, record_trace=False)
        query_times.append(time.perf_counter() - start)
    fig = plot_scaling(list(sizes), build_times, query_times, workdir / "scaling.png")
    return {
        "sizes": list(sizes),
        "build_seconds": build_times,
        "query_seconds": query_times,
        "figure": fig,
    }
