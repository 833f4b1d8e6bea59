"""Shared test helpers: leaf factories and manifest writers."""

import json
from pathlib import Path

import numpy as np

from hmrag.embedding import TokenEmbeddingSet, fuse, unit_rows
from hmrag.tree import TreeNode


def make_leaf(node_id: str, text: str, provider, vector=None) -> TreeNode:
    vec = provider.embed_text([text])[0] if vector is None else np.asarray(vector, float)
    tokens = text.split() or [text]
    token_vecs = unit_rows(provider.embed_text(tokens))
    return TreeNode(
        node_id=node_id,
        level=0,
        children=[],
        summary_text=text,
        embedding=fuse(vec, None, 1.0),
        token_set=TokenEmbeddingSet(owner=node_id, vectors=token_vecs),
        source=[node_id],
    )


def two_blob_leaves(provider, per_blob=3):
    leaves = []
    for b, vocab in enumerate(["alpha bravo charlie delta echo", "uno dos tres cuatro cinco"]):
        words = vocab.split()
        for i in range(per_blob):
            text = " ".join(words[i:] + words[:i]) + f" blob{b}common"
            leaves.append(make_leaf(f"blob{b}-leaf{i}", text, provider))
    return leaves


def write_manifest(tmp_path: Path, pages, assets=None):
    manifest = tmp_path / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for page in pages:
            fh.write(json.dumps(page) + "\n")
    if assets is not None:
        with open(tmp_path / "manifest.assets.jsonl", "w") as fh:
            for a in assets:
                fh.write(json.dumps(a) + "\n")
    return manifest
