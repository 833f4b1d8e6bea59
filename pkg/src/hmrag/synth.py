"""Deterministic synthetic corpora, queries, and judgments for tests and
desk-scale benchmarks.

Topics use disjoint keyword vocabularies so hash embeddings separate them;
each page carries unique marker tokens so queries can target a single chunk,
and image stubs carry caption-only keywords so some gold evidence is reachable
only through visual-token matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .corpus import tokenize

PHASE_MIX = {"rescue": 150, "recovery": 200, "reconstruction": 150}


@dataclass
class SynthSpec:
    seed: int = 0
    docs: int = 4
    pages_per_doc: int = 4
    tokens_per_page: int = 120
    image_density: float = 0.5  # fraction of pages carrying one image
    topics: int = 2
    n_queries: int = 12
    image_query_fraction: float = 0.4

    def __post_init__(self):
        if min(self.docs, self.pages_per_doc, self.tokens_per_page, self.topics) <= 0:
            raise ValueError("counts must be positive")
        if self.docs < self.topics:
            raise ValueError("need at least one doc per topic")
        if not 0.0 <= self.image_density <= 1.0:
            raise ValueError("image_density must be in [0,1]")
        if not 0.0 <= self.image_query_fraction <= 1.0:
            raise ValueError("image_query_fraction must be in [0,1]")


def _topic_vocab(topic: int) -> Tuple[List[str], List[str]]:
    anchors = [f"topic{topic}anchor{j}" for j in range(3)]
    words = [f"t{topic}w{i}" for i in range(30)]
    return anchors, words


def _page_tokens(doc: str, page: int, topic: int, n: int, rng: np.random.Generator) -> List[str]:
    anchors, words = _topic_vocab(topic)
    uniq = [f"uniq{doc}p{page}{s}" for s in "abc"]
    tokens = list(uniq) + [anchors[0]]
    while len(tokens) < n:
        if len(tokens) % 8 == 0:
            tokens.append(anchors[len(tokens) % len(anchors)])
        else:
            tokens.append(words[int(rng.integers(len(words)))])
    return tokens[:n]


def phase_counts(total: int) -> Dict[str, int]:
    """Scale the 150/200/150 phase proportions to `total` queries."""
    weights = sum(PHASE_MIX.values())
    counts = {p: (total * w) // weights for p, w in PHASE_MIX.items()}
    remainder = total - sum(counts.values())
    for p in list(PHASE_MIX):
        if remainder <= 0:
            break
        counts[p] += 1
        remainder -= 1
    return counts


def generate(spec: SynthSpec, out_dir: str | Path) -> Dict[str, Path]:
    """Write manifest, assets, image stubs, queries, and judgments under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images_dir = out / "images"
    images_dir.mkdir(exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    pages = []
    assets = []
    topic_of_chunk: Dict[str, int] = {}
    image_of_page: Dict[Tuple[str, int], str] = {}
    for d in range(spec.docs):
        doc_id = f"doc{d}"
        topic = d % spec.topics
        for p in range(1, spec.pages_per_doc + 1):
            tokens = _page_tokens(doc_id, p, topic, spec.tokens_per_page, rng)
            image_refs: List[str] = []
            if rng.random() < spec.image_density:
                image_id = f"img-{doc_id}-p{p}"
                anchors, _ = _topic_vocab(topic)
                caption_words = [f"imgword{doc_id}p{p}x{i}" for i in range(4)] + [anchors[0]]
                stub = images_dir / f"{image_id}.txt"
                stub.write_text(" ".join(caption_words), encoding="utf-8")
                assets.append(
                    {
                        "image_id": image_id,
                        "doc_id": doc_id,
                        "page_no": p,
                        "file_path": str(stub.relative_to(out)),
                    }
                )
                image_refs.append(image_id)
                image_of_page[(doc_id, p)] = image_id
            pages.append(
                {
                    "doc_id": doc_id,
                    "page_no": p,
                    "text": " ".join(tokens),
                    "section_breaks": [],
                    "image_refs": image_refs,
                }
            )
            topic_of_chunk[f"{doc_id}-p{p}-c0"] = topic

    manifest = out / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for rec in pages:
            fh.write(json.dumps(rec) + "\n")
    assets_file = out / "manifest.assets.jsonl"
    with open(assets_file, "w", encoding="utf-8") as fh:
        for rec in assets:
            fh.write(json.dumps(rec) + "\n")

    queries, judgments = _make_queries(spec, pages, image_of_page, topic_of_chunk, rng)
    queries_file = out / "queries.jsonl"
    with open(queries_file, "w", encoding="utf-8") as fh:
        for rec in queries:
            fh.write(json.dumps(rec) + "\n")
    judgments_file = out / "judgments.jsonl"
    with open(judgments_file, "w", encoding="utf-8") as fh:
        for rec in judgments:
            fh.write(json.dumps(rec) + "\n")

    return {
        "manifest": manifest,
        "assets": assets_file,
        "queries": queries_file,
        "judgments": judgments_file,
    }


def _make_queries(spec, pages, image_of_page, topic_of_chunk, rng) -> Tuple[List[dict], List[dict]]:
    phases: List[str] = []
    for phase, count in phase_counts(spec.n_queries).items():
        phases.extend([phase] * count)

    image_pages = sorted(image_of_page)
    text_pages = sorted((p["doc_id"], p["page_no"]) for p in pages)
    n_image = min(int(round(spec.n_queries * spec.image_query_fraction)), len(image_pages))

    queries: List[dict] = []
    judgments: List[dict] = []
    for i in range(spec.n_queries):
        qid = f"q{i:03d}"
        phase = phases[i]
        is_image = i < n_image and image_pages
        if is_image:
            doc_id, page_no = image_pages[i % len(image_pages)]
        else:
            doc_id, page_no = text_pages[int(rng.integers(len(text_pages)))]
        gold_chunk = f"{doc_id}-p{page_no}-c0"
        topic = topic_of_chunk[gold_chunk]
        anchors, _ = _topic_vocab(topic)
        if is_image:
            # Caption-only keywords plus a topic anchor: no classifier keywords,
            # so the query classifies uniform and routes high-entropy.
            words = [f"imgword{doc_id}p{page_no}x{j}" for j in range(4)] + [anchors[0]]
            text = " ".join(words)
        else:
            text = f"how to uniq{doc_id}p{page_no}a uniq{doc_id}p{page_no}b {anchors[0]}"
        queries.append({"query_id": qid, "text": text, "phase": phase})

        gold_set = [gold_chunk]
        judgments.append({"type": "rel", "query_id": qid, "node_id": gold_chunk, "grade": 3})
        for chunk_id, t in sorted(topic_of_chunk.items()):
            if t == topic and chunk_id != gold_chunk:
                judgments.append({"type": "rel", "query_id": qid, "node_id": chunk_id, "grade": 1})
        judgments.append({"type": "gold_evidence", "query_id": qid, "node_ids": gold_set})
        page_text = next(
            p["text"] for p in pages if p["doc_id"] == doc_id and p["page_no"] == page_no
        )
        label = " ".join(tokenize(page_text)[:4])
        judgments.append({"type": "gold_subtasks", "query_id": qid, "labels": [label]})
    return queries, judgments
