"""Hierarchical summary tree: seeded k-means clustering with silhouette/DBI
model selection, provider-backed cluster summarization, and structure export."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .corpus import tokenize
from .embedding import FusedEmbedding, TokenEmbeddingSet, fuse, token_set_for_text

logger = logging.getLogger(__name__)

MAX_LLOYD_ITERS = 100
DBI_EPSILON = 1e-9


class DegenerateClusteringError(ValueError):
    """Clustering is undefined: identical points or identical centroids."""


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    labels: np.ndarray  # (n,) ints in [0, k)
    centroids: np.ndarray  # (k, d)


@dataclass
class TreeNode:
    node_id: str
    level: int
    children: List[str]
    summary_text: str
    embedding: FusedEmbedding
    # Either a concrete token set or a zero-arg factory (lazy load from disk).
    token_set: object
    source: List[str] = field(default_factory=list)  # chunk/image ids for leaves


def resolve_token_set(node: TreeNode) -> TokenEmbeddingSet:
    ts = node.token_set
    if callable(ts):
        ts = ts()
        node.token_set = ts
    return ts


@dataclass
class Tree:
    root_id: str
    nodes: Dict[str, TreeNode]

    def leaves_under(self, node_id: str) -> List[str]:
        node = self.nodes[node_id]
        if not node.children:
            return [node_id]
        out: List[str] = []
        for child in node.children:
            out.extend(self.leaves_under(child))
        return out


@dataclass
class TreeConfig:
    seed: int = 0
    k_min: int = 2
    k_max: int = 8
    summary_budget: int = 512
    root_threshold: int = 1


def _pairwise_sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # ||a||^2 + ||b||^2 - 2ab expansion; avoids the (n, m, d) intermediate.
    a2 = np.sum(a * a, axis=1)[:, None]
    b2 = np.sum(b * b, axis=1)[None, :]
    return np.maximum(a2 + b2 - 2.0 * (a @ b.T), 0.0)


_EXACT_DIST_BUDGET = 1 << 24  # max n*n*d elements for the exact broadcast path


def _pairwise_dist(pts: np.ndarray) -> np.ndarray:
    """All-pairs Euclidean distances. Small inputs use exact differencing
    (the expansion form loses ~1e-9 to cancellation); large inputs fall back
    to the expansion to avoid the (n, n, d) intermediate."""
    n, d = pts.shape
    if n * n * d <= _EXACT_DIST_BUDGET:
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=2))
    return np.sqrt(_pairwise_sq(pts, pts))


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            raise DegenerateClusteringError(
                "cannot place distinct centroids: remaining points identical"
            )
        probs = d2 / total
        centroids[i] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


KMEANS_RESTARTS = 4


def _lloyd(pts: np.ndarray, k: int, rng: np.random.Generator) -> ClusterAssignment:
    n = pts.shape[0]
    centroids = _kmeanspp_init(pts, k, rng)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(MAX_LLOYD_ITERS):
        d2 = _pairwise_sq(pts, centroids)
        new_labels = np.argmin(d2, axis=1)
        empty = [c for c in range(k) if not np.any(new_labels == c)]
        if empty:
            own_d2 = d2[np.arange(n), new_labels].astype(np.float64)
            for cluster in empty:
                far = int(np.argmax(own_d2))
                centroids[cluster] = pts[far]
                new_labels[far] = cluster
                own_d2[far] = -1.0
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for cluster in range(k):
            centroids[cluster] = pts[labels == cluster].mean(axis=0)
    return ClusterAssignment(k=k, labels=labels, centroids=centroids)


def _wcss(pts: np.ndarray, assignment: ClusterAssignment) -> float:
    diff = pts - assignment.centroids[assignment.labels]
    return float(np.sum(diff * diff))


def kmeans(points: Sequence[np.ndarray], k: int, seed: int) -> ClusterAssignment:
    """Seeded k-means++ plus Lloyd iterations, best of several restarts by
    within-cluster sum of squares; empty clusters re-seeded with the point
    farthest from its current centroid."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    if n == 0:
        raise ValueError("points must be non-empty")
    if not 2 <= k <= n:
        raise ValueError(f"k must be in [2, {n}], got {k}")
    rng = np.random.default_rng(seed)
    best, best_cost = None, np.inf
    for _ in range(KMEANS_RESTARTS):
        assignment = _lloyd(pts, k, rng)
        cost = _wcss(pts, assignment)
        if cost < best_cost:
            best, best_cost = assignment, cost
    return best


def silhouette(points: Sequence[np.ndarray], assignment: ClusterAssignment) -> float:
    """Mean of (b - a) / max(a, b); singleton-cluster points contribute 0."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    labels = assignment.labels
    k = assignment.k
    if k < 2:
        raise ValueError("silhouette requires k >= 2")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValueError("every cluster must be non-empty")
    dists = _pairwise_dist(pts)
    n = pts.shape[0]
    # cluster_sums[i, c] = sum of distances from point i to cluster c's members
    cluster_sums = np.stack([dists[:, labels == c].sum(axis=1) for c in range(k)], axis=1)
    idx = np.arange(n)
    a = cluster_sums[idx, labels] / np.maximum(counts[labels] - 1, 1)
    other = cluster_sums / counts[None, :]
    other[idx, labels] = np.inf
    b = other.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(denom > 0.0, (b - a) / denom, 0.0)
    scores[counts[labels] == 1] = 0.0
    return float(scores.mean())


def davies_bouldin(points: Sequence[np.ndarray], assignment: ClusterAssignment) -> float:
    """Mean over clusters of the worst (S_i + S_j) / M_ij ratio."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    labels = assignment.labels
    k = assignment.k
    if k < 2:
        raise ValueError("davies_bouldin requires k >= 2")
    centroids = np.stack([pts[labels == c].mean(axis=0) for c in range(k)])
    scatter = np.array(
        [np.linalg.norm(pts[labels == c] - centroids[c], axis=1).mean() for c in range(k)]
    )
    # k is small, so the exact difference form is always affordable here.
    cdiff = centroids[:, None, :] - centroids[None, :, :]
    sep = np.sqrt(np.sum(cdiff * cdiff, axis=2))
    ratios = np.zeros(k)
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if i == j:
                continue
            if sep[i, j] == 0.0:
                raise DegenerateClusteringError(f"identical centroids {i} and {j}")
            worst = max(worst, (scatter[i] + scatter[j]) / sep[i, j])
        ratios[i] = worst
    return float(ratios.mean())


def select_k(
    points: Sequence[np.ndarray], k_range: Tuple[int, int], seed: int
) -> int:
    """argmax over k of Silhouette(k) + 1/(DBI(k) + eps); ties to the smallest k.

    Returns 1 (no split) for degenerate inputs: fewer than 3 points or zero
    variance.
    """
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    k_min, k_max = k_range
    if k_min < 2 or k_max < k_min:
        raise ValueError(f"invalid k range {k_range}")
    n = pts.shape[0]
    if n < 3:
        return 1
    if np.allclose(pts, pts[0]):
        return 1
    k_max = min(k_max, n - 1)
    if k_max < k_min:
        return 1
    best_k, best_score = None, -np.inf
    for k in range(k_min, k_max + 1):
        try:
            assignment = kmeans(pts, k, seed)
            sil = silhouette(pts, assignment)
            dbi = davies_bouldin(pts, assignment)
        except DegenerateClusteringError:
            continue
        score = sil + 1.0 / (dbi + DBI_EPSILON)
        if score > best_score:
            best_k, best_score = k, score
    return best_k if best_k is not None else 1


def build_tree(
    leaves: Sequence[TreeNode],
    provider,
    config: TreeConfig,
    alpha: float = 0.7,
) -> Tree:
    """Cluster, summarize, and stack levels until a single root covers all leaves."""
    if not leaves:
        raise ValueError("build_tree requires at least one leaf")
    if any(leaf.level != 0 for leaf in leaves):
        raise ValueError("all leaves must be level 0")
    nodes: Dict[str, TreeNode] = {leaf.node_id: leaf for leaf in leaves}
    if len(nodes) != len(leaves):
        raise ValueError("duplicate leaf node_ids")

    current = list(leaves)
    level = 1
    while len(current) > max(1, config.root_threshold) or (
        len(current) == 1 and current[0].level == 0
    ):
        groups = _group(current, config, level)
        current = [
            _summarize_group(group, level, idx, provider, config, alpha, nodes)
            for idx, group in enumerate(groups)
        ]
        level += 1
    if len(current) > 1:
        # root_threshold > 1: one final all-inclusive root summary
        current = [_summarize_group(current, level, 0, provider, config, alpha, nodes)]
    return Tree(root_id=current[0].node_id, nodes=nodes)


def _group(current: List[TreeNode], config: TreeConfig, level: int) -> List[List[TreeNode]]:
    points = [node.embedding.vector for node in current]
    k = select_k(points, (config.k_min, config.k_max), config.seed + level)
    if k <= 1:
        return [list(current)]
    assignment = kmeans(points, k, config.seed + level)
    groups: List[List[TreeNode]] = [[] for _ in range(k)]
    for node, label in zip(current, assignment.labels):
        groups[int(label)].append(node)
    # Deterministic ordering: by the smallest member node_id of each group.
    groups.sort(key=lambda g: min(n.node_id for n in g))
    return groups


def _summarize_group(
    group: List[TreeNode],
    level: int,
    idx: int,
    provider,
    config: TreeConfig,
    alpha: float,
    nodes: Dict[str, TreeNode],
) -> TreeNode:
    children = sorted(group, key=lambda n: n.node_id)
    summary = provider.summarize([c.summary_text for c in children], config.summary_budget)
    vec = provider.embed_text([summary])[0]
    embedding = fuse(vec, None, alpha)
    tokens = tokenize(summary)
    token_set = token_set_for_text(f"L{level}-{idx}", tokens if tokens else [summary], provider)
    node = TreeNode(
        node_id=f"L{level}-{idx}",
        level=level,
        children=[c.node_id for c in children],
        summary_text=summary,
        embedding=embedding,
        token_set=token_set,
    )
    if node.node_id in nodes:
        raise ValueError(f"duplicate node_id {node.node_id}")
    nodes[node.node_id] = node
    return node


def export_structure(tree: Tree) -> str:
    """Plain-text node/edge listing, byte-stable for a given tree."""
    lines: List[str] = []
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        marker = " root" if node_id == tree.root_id else ""
        lines.append(f"node {node_id} level={node.level}{marker}")
    for node_id in sorted(tree.nodes):
        for child in tree.nodes[node_id].children:
            lines.append(f"edge {node_id} -> {child}")
    return "\n".join(lines) + "\n"
