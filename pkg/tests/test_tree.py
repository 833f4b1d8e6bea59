import numpy as np
import pytest

from hmrag.tree import (
    ClusterAssignment,
    DegenerateClusteringError,
    TreeConfig,
    build_tree,
    davies_bouldin,
    export_structure,
    kmeans,
    resolve_token_set,
    select_k,
    silhouette,
)
from helpers import make_leaf, two_blob_leaves
from oracles import davies_bouldin_brute, kmeans_best_2partition, silhouette_brute


def planted(rng, k, per_cluster=8, dim=4, spread=0.05, gap=10.0):
    """Well-separated Gaussian blobs plus the true labels."""
    points, labels = [], []
    for c in range(k):
        center = rng.standard_normal(dim) * gap + c * gap
        for _ in range(per_cluster):
            points.append(center + rng.standard_normal(dim) * spread)
            labels.append(c)
    return np.array(points), labels


class TestKMeans:
    def test_two_blob_exact(self):
        rng = np.random.default_rng(0)
        pts, truth = planted(rng, 2, per_cluster=5)
        got = kmeans(pts, 2, seed=1)
        oracle = kmeans_best_2partition(pts)
        # matches both ground truth and the exhaustive minimum-WCSS partition,
        # up to relabeling
        for ref in (truth, oracle):
            assert all(
                (got.labels[i] == got.labels[0]) == (ref[i] == ref[0])
                for i in range(len(pts))
            )

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((20, 4))
        a = kmeans(pts, 3, seed=5)
        b = kmeans(pts, 3, seed=5)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centroids, b.centroids)

    def test_identical_points_degenerate(self):
        pts = np.ones((5, 3))
        with pytest.raises(DegenerateClusteringError):
            kmeans(pts, 2, seed=0)

    def test_k_bounds(self):
        pts = np.random.default_rng(0).standard_normal((4, 2))
        with pytest.raises(ValueError):
            kmeans(pts, 1, seed=0)
        with pytest.raises(ValueError):
            kmeans(pts, 5, seed=0)

    def test_k_equals_n(self):
        pts = np.arange(6, dtype=float).reshape(3, 2)
        got = kmeans(pts, 3, seed=0)
        assert sorted(got.labels.tolist()) == [0, 1, 2]

    def test_no_empty_clusters(self):
        rng = np.random.default_rng(9)
        for seed in range(10):
            pts = rng.standard_normal((12, 3))
            got = kmeans(pts, 4, seed=seed)
            assert set(got.labels.tolist()) == {0, 1, 2, 3}


class TestQualityIndices:
    def test_silhouette_matches_brute(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n, k = int(rng.integers(5, 15)), int(rng.integers(2, 4))
            pts = rng.standard_normal((n, 3))
            labels = rng.integers(0, k, n)
            while len(set(labels.tolist())) < k:
                labels = rng.integers(0, k, n)
            asg = ClusterAssignment(k=k, labels=labels, centroids=np.zeros((k, 3)))
            assert silhouette(pts, asg) == pytest.approx(
                silhouette_brute(pts, labels), abs=1e-9)

    def test_dbi_matches_brute(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n, k = int(rng.integers(5, 15)), int(rng.integers(2, 4))
            pts = rng.standard_normal((n, 3))
            labels = rng.integers(0, k, n)
            while len(set(labels.tolist())) < k:
                labels = rng.integers(0, k, n)
            asg = ClusterAssignment(k=k, labels=labels, centroids=np.zeros((k, 3)))
            assert davies_bouldin(pts, asg) == pytest.approx(
                davies_bouldin_brute(pts, labels), abs=1e-9)

    def test_singleton_cluster_contributes_zero(self):
        pts = np.array([[0.0], [0.1], [10.0]])
        asg = ClusterAssignment(k=2, labels=np.array([0, 0, 1]), centroids=np.zeros((2, 1)))
        assert silhouette(pts, asg) == pytest.approx(silhouette_brute(pts, [0, 0, 1]), abs=1e-12)

    def test_dbi_identical_centroids_degenerate(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        asg = ClusterAssignment(k=2, labels=np.array([0, 1, 1, 0]), centroids=np.zeros((2, 2)))
        with pytest.raises(DegenerateClusteringError):
            davies_bouldin(pts, asg)


class TestSelectK:
    def test_planted_k_recovered(self):
        for true_k in (2, 3, 4):
            rng = np.random.default_rng(true_k)
            pts, _ = planted(rng, true_k, per_cluster=6)
            assert select_k(pts, (2, 8), seed=0) == true_k

    def test_fewer_than_three_points(self):
        assert select_k(np.array([[0.0], [1.0]]), (2, 8), seed=0) == 1

    def test_zero_variance(self):
        assert select_k(np.ones((10, 3)), (2, 8), seed=0) == 1

    def test_k_max_clamped_to_n_minus_1(self):
        rng = np.random.default_rng(0)
        pts = rng.standard_normal((4, 2)) * 10
        assert select_k(pts, (2, 8), seed=0) <= 3

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            select_k(np.zeros((5, 2)), (1, 8), seed=0)


class TestBuildTree:
    def test_single_leaf_gets_root(self, provider):
        leaves = [make_leaf("c0", "alpha bravo", provider)]
        tree = build_tree(leaves, provider, TreeConfig(seed=0))
        root = tree.nodes[tree.root_id]
        assert root.level >= 1 and root.children == ["c0"]

    def test_two_blobs_structure(self, provider):
        leaves = two_blob_leaves(provider)
        tree = build_tree(leaves, provider, TreeConfig(seed=0))
        root = tree.nodes[tree.root_id]
        assert sorted(tree.leaves_under(tree.root_id)) == sorted(l.node_id for l in leaves)
        # every leaf appears exactly once in the partition
        seen = [leaf for child in root.children for leaf in tree.leaves_under(child)]
        assert sorted(seen) == sorted(l.node_id for l in leaves)

    def test_invariants(self, provider):
        leaves = two_blob_leaves(provider, per_blob=4)
        tree = build_tree(leaves, provider, TreeConfig(seed=1))
        for node in tree.nodes.values():
            for child_id in node.children:
                assert tree.nodes[child_id].level < node.level
            assert node.embedding.vector.shape == (1024,)
            assert resolve_token_set(node).vectors.shape[0] >= 1

    def test_deterministic_export(self, provider):
        leaves1 = two_blob_leaves(provider)
        leaves2 = two_blob_leaves(provider)
        t1 = build_tree(leaves1, provider, TreeConfig(seed=7))
        t2 = build_tree(leaves2, provider, TreeConfig(seed=7))
        assert export_structure(t1) == export_structure(t2)

    def test_summary_is_provider_output(self, provider):
        leaves = [make_leaf("c0", "alpha bravo", provider), make_leaf("c1", "uno dos", provider)]
        tree = build_tree(leaves, provider, TreeConfig(seed=0, summary_budget=3))
        root = tree.nodes[tree.root_id]
        assert root.summary_text == provider.summarize(["alpha bravo", "uno dos"], 3)

    def test_empty_rejected(self, provider):
        with pytest.raises(ValueError):
            build_tree([], provider, TreeConfig())

    def test_duplicate_leaf_ids_rejected(self, provider):
        leaves = [make_leaf("c0", "a", provider), make_leaf("c0", "b", provider)]
        with pytest.raises(ValueError):
            build_tree(leaves, provider, TreeConfig())


def test_export_structure_format(provider):
    leaves = [make_leaf("c0", "alpha", provider)]
    tree = build_tree(leaves, provider, TreeConfig(seed=0))
    text = export_structure(tree)
    assert "node c0 level=0" in text
    assert f"node {tree.root_id} level=1 root" in text
    assert f"edge {tree.root_id} -> c0" in text
    assert text.endswith("\n")
