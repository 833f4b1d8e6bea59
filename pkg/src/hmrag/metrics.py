"""Ranking and response metrics: NDCG, grounding accuracy, decomposition accuracy.

Judgment files are line-delimited JSON with a ``type`` discriminator:

  {"type": "rel", "query_id": ..., "node_id": ..., "grade": n}
  {"type": "gold_evidence", "query_id": ..., "node_ids": [...]}
  {"type": "gold_subtasks", "query_id": ..., "labels": [...]}
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Set


@dataclass
class JudgmentSet:
    relevance: Dict[str, Dict[str, int]] = field(default_factory=dict)  # qid -> node -> grade
    gold_evidence: Dict[str, Set[str]] = field(default_factory=dict)
    gold_subtasks: Dict[str, Set[str]] = field(default_factory=dict)


def load_judgments(path: str | Path) -> JudgmentSet:
    js = JudgmentSet()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.get("type")
            qid = str(rec["query_id"])
            if kind == "rel":
                grade = int(rec["grade"])
                if grade < 0:
                    raise ValueError(f"{path}:{lineno}: negative grade")
                js.relevance.setdefault(qid, {})[str(rec["node_id"])] = grade
            elif kind == "gold_evidence":
                js.gold_evidence[qid] = {str(n) for n in rec["node_ids"]}
            elif kind == "gold_subtasks":
                js.gold_subtasks[qid] = {normalize_label(l) for l in rec["labels"]}
            else:
                raise ValueError(f"{path}:{lineno}: unknown record type {kind!r}")
    return js


def normalize_label(label: str) -> str:
    return re.sub(r"\s+", " ", label.strip().lower())


def ndcg(ranking: Sequence[str], judgments: Dict[str, int], k: int) -> float:
    """DCG@k with gain 2^rel - 1 and discount log2(rank + 1), over ideal DCG@k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    grades = sorted(judgments.values(), reverse=True)
    if not grades or grades[0] <= 0:
        raise ValueError("ndcg undefined: no positive judgment grades")

    def dcg(rels: Sequence[int]) -> float:
        return sum(
            (2**rel - 1) / math.log2(rank + 1)
            for rank, rel in enumerate(rels[:k], start=1)
        )

    got = dcg([judgments.get(nid, 0) for nid in ranking])
    ideal = dcg(grades)
    return got / ideal


def sga(citations: Dict[str, Set[str]], gold_evidence: Dict[str, Set[str]]) -> float:
    """Fraction of queries whose citation set intersects the gold evidence set."""
    missing = [q for q in citations if q not in gold_evidence]
    if missing:
        raise ValueError(f"queries without gold evidence: {missing}")
    if not citations:
        return 0.0
    grounded = sum(1 for q, cited in citations.items() if cited & gold_evidence[q])
    return grounded / len(citations)


def set_f1(predicted: Set[str], gold: Set[str]) -> float:
    if not predicted or not gold:
        return 0.0
    hits = len(predicted & gold)
    if hits == 0:
        return 0.0
    precision = hits / len(predicted)
    recall = hits / len(gold)
    return 2 * precision * recall / (precision + recall)


def tda(decompositions: Dict[str, Sequence[str]], gold_subtasks: Dict[str, Set[str]]) -> float:
    """Fraction of queries whose predicted/gold label set-F1 reaches 0.5."""
    if not decompositions:
        return 0.0
    correct = 0
    for qid, labels in decompositions.items():
        predicted = {normalize_label(l) for l in labels}
        gold = {normalize_label(l) for l in gold_subtasks.get(qid, set())}
        if set_f1(predicted, gold) >= 0.5:
            correct += 1
    return correct / len(decompositions)
