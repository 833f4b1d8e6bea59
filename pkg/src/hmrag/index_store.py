"""Index directory persistence.

Layout (format version 1):

  VERSION            format marker
  config.json        engine config snapshot
  pages.jsonl        manifest snapshot
  assets.jsonl       image assets with provider captions
  chunks.jsonl       chunk table
  projection.f32/.json   visual->text projection (little-endian f32, row-major)
  chunk_text.f32     per-chunk text embeddings   (n x 1024)
  chunk_fused.f32    per-chunk fused embeddings  (n x 1024)
  asset_visual.f32   per-asset visual embeddings (m x 768)
  token_vocab.f32    distinct token vectors shared across chunks
  chunk_tokens.json  per-chunk token index lists into the vocabulary
  tree/              node table + summary embeddings (written by build)
  controller.json    strategy state
  traces.jsonl       query routing traces (append-only)

Writes are atomic: content is staged in a temp directory and renamed into
place, so an interrupted command leaves a valid or absent index, never a
torn one.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import TEXT_DIM, VISUAL_DIM
from .config import EngineConfig
from .controller import StrategyState, state_from_dict, state_to_dict
from .corpus import Corpus, ImageAsset, TextChunk, chunk_corpus, load_manifest, tokenize
from .embedding import (
    FusedEmbedding,
    ProjectionMatrix,
    TokenEmbeddingSet,
    build_projection,
    fuse,
    project_visual,
    unit_rows,
)
from .tree import Tree, TreeConfig, TreeNode, build_tree, resolve_token_set

FORMAT_VERSION = "hmrag-index-1"


def replace_chunk_images(chunk: TextChunk) -> TextChunk:
    from dataclasses import replace

    return replace(chunk, linked_images=[])


class IndexStoreError(RuntimeError):
    """Index directory missing, locked, torn, or of the wrong version."""


@contextmanager
def index_lock(index_dir: Path):
    lock = Path(index_dir) / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise IndexStoreError(f"index {index_dir} is locked by another writer ({lock})")
    try:
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _write_f32(path: Path, arr: np.ndarray) -> None:
    path.write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_f32(path: Path, shape) -> np.ndarray:
    arr = np.frombuffer(path.read_bytes(), dtype="<f4")
    return arr.reshape(shape)


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> List[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def ingest(
    manifest_path: str | Path,
    out_dir: str | Path,
    config: EngineConfig,
    provider=None,
    force: bool = False,
) -> Path:
    """Chunk, caption, embed, and fuse the corpus; write a fresh index directory."""
    out_dir = Path(out_dir)
    if out_dir.exists():
        if not force:
            raise IndexStoreError(f"{out_dir} already exists; pass force to overwrite")
    provider = provider or config.make_provider()
    corpus = load_manifest(manifest_path)
    if not corpus.pages:
        raise ValueError("empty corpus")
    chunks = chunk_corpus(corpus, config.window, config.overlap)
    projection = build_projection(config.seed)

    captions: Dict[str, str] = {}
    visual_vecs: List[np.ndarray] = []
    if config.multimodal:
        for asset in corpus.assets:
            data = Path(asset.file_path).read_bytes()
            caption, vec = provider.embed_image(asset.image_id, data)
            captions[asset.image_id] = caption
            visual_vecs.append(vec)
    else:
        # Text-only configuration: assets stay listed but contribute nothing.
        chunks = [replace_chunk_images(c) for c in chunks]
    visual_by_id = {
        a.image_id: v for a, v in zip(corpus.assets, visual_vecs)
    }

    text_vecs = provider.embed_text([c.text for c in chunks]) if chunks else []
    fused_vecs: List[np.ndarray] = []
    vocab: List[str] = []
    vocab_index: Dict[str, int] = {}
    chunk_token_indices: List[List[int]] = []
    for chunk, tvec in zip(chunks, text_vecs):
        if chunk.linked_images:
            projected = [
                project_visual(visual_by_id[img], projection) for img in chunk.linked_images
            ]
            fused_vecs.append(fuse(tvec, np.mean(projected, axis=0), config.alpha).vector)
        else:
            fused_vecs.append(fuse(tvec, None, config.alpha).vector)
        tokens = tokenize(chunk.text)
        for img in chunk.linked_images:
            tokens.extend(tokenize(captions[img]))
        idxs: List[int] = []
        seen: set = set()
        for t in tokens:
            if t in seen:
                continue
            seen.add(t)
            if t not in vocab_index:
                vocab_index[t] = len(vocab)
                vocab.append(t)
            idxs.append(vocab_index[t])
        chunk_token_indices.append(idxs)
    vocab_vecs: List[np.ndarray] = []
    for i in range(0, len(vocab), 256):
        vocab_vecs.extend(provider.embed_text(vocab[i : i + 256]))
    vocab_mat = unit_rows(vocab_vecs) if vocab_vecs else np.zeros((0, TEXT_DIM))

    tmp = out_dir.parent / (out_dir.name + f".tmp-{os.getpid()}")
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        (tmp / "VERSION").write_text(FORMAT_VERSION + "\n")
        (tmp / "config.json").write_text(json.dumps(config.to_dict(), sort_keys=True, indent=2))
        _write_jsonl(tmp / "pages.jsonl", (asdict(p) for p in corpus.pages))
        _write_jsonl(
            tmp / "assets.jsonl",
            (
                {**asdict(a), "caption": captions.get(a.image_id)}
                for a in corpus.assets
            ),
        )
        _write_jsonl(
            tmp / "chunks.jsonl",
            (
                {
                    "chunk_id": c.chunk_id,
                    "doc_id": c.doc_id,
                    "page_no": c.page_no,
                    "token_span": list(c.token_span),
                    "text": c.text,
                    "linked_images": c.linked_images,
                }
                for c in chunks
            ),
        )
        _write_f32(tmp / "projection.f32", projection.entries)
        (tmp / "projection.json").write_text(
            json.dumps({"seed": projection.seed, "shape": [TEXT_DIM, VISUAL_DIM]})
        )
        _write_f32(tmp / "chunk_text.f32", np.stack(text_vecs) if text_vecs else np.zeros((0, TEXT_DIM)))
        _write_f32(tmp / "chunk_fused.f32", np.stack(fused_vecs) if fused_vecs else np.zeros((0, TEXT_DIM)))
        _write_f32(
            tmp / "asset_visual.f32",
            np.stack(visual_vecs) if visual_vecs else np.zeros((0, VISUAL_DIM)),
        )
        _write_f32(tmp / "token_vocab.f32", vocab_mat)
        (tmp / "chunk_tokens.json").write_text(
            json.dumps({"vocab_size": len(vocab), "chunk_indices": chunk_token_indices})
        )
        (tmp / "controller.json").write_text(
            json.dumps(state_to_dict(StrategyState.fresh(config.beta)), sort_keys=True, indent=2)
        )
        (tmp / "traces.jsonl").write_text("")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.rename(tmp, out_dir)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)
    return out_dir


class IndexStore:
    """Read-side view of an index directory."""

    def __init__(self, index_dir: str | Path):
        self.dir = Path(index_dir)
        version_file = self.dir / "VERSION"
        if not version_file.exists():
            raise IndexStoreError(f"{self.dir} is not an index directory (no VERSION)")
        version = version_file.read_text().strip()
        if version != FORMAT_VERSION:
            raise IndexStoreError(f"unsupported index version {version!r}, expected {FORMAT_VERSION!r}")
        self.config = EngineConfig.from_dict(json.loads((self.dir / "config.json").read_text()))
        self.chunks = _read_jsonl(self.dir / "chunks.jsonl")
        self.assets = _read_jsonl(self.dir / "assets.jsonl")
        n = len(self.chunks)
        self.chunk_text = _read_f32(self.dir / "chunk_text.f32", (n, TEXT_DIM))
        self.chunk_fused = _read_f32(self.dir / "chunk_fused.f32", (n, TEXT_DIM))
        # Text-only indexes keep the asset table but store no visual vectors,
        # so the row count comes from the blob itself.
        self.asset_visual = _read_f32(self.dir / "asset_visual.f32", (-1, VISUAL_DIM))
        meta = json.loads((self.dir / "chunk_tokens.json").read_text())
        self.chunk_token_indices = meta["chunk_indices"]
        self.token_vocab = _read_f32(
            self.dir / "token_vocab.f32", (int(meta["vocab_size"]), TEXT_DIM)
        )
        pmeta = json.loads((self.dir / "projection.json").read_text())
        self.projection = ProjectionMatrix(
            entries=np.asarray(
                _read_f32(self.dir / "projection.f32", tuple(pmeta["shape"])), dtype=np.float64
            ),
            seed=int(pmeta["seed"]),
        )

    # -- leaves ------------------------------------------------------------
    def _leaf_token_loader(self, i: int, chunk: dict):
        asset_index = {a["image_id"]: j for j, a in enumerate(self.assets)}

        def load() -> TokenEmbeddingSet:
            parts = []
            idxs = self.chunk_token_indices[i]
            if idxs:
                parts.append(np.asarray(self.token_vocab[idxs], dtype=np.float64))
            for img in chunk["linked_images"]:
                vis = np.asarray(self.asset_visual[asset_index[img]], dtype=np.float64)
                projected = project_visual(vis, self.projection)
                norm = np.linalg.norm(projected)
                parts.append((projected / norm if norm > 0 else projected)[None, :])
            vectors = np.concatenate(parts, axis=0) if parts else np.zeros((1, TEXT_DIM))
            return TokenEmbeddingSet(
                owner=chunk["chunk_id"],
                vectors=vectors,
                modality="mixed" if chunk["linked_images"] else "text",
            )

        return load

    def leaf_nodes(self) -> List[TreeNode]:
        leaves = []
        for i, chunk in enumerate(self.chunks):
            has_visual = bool(chunk["linked_images"])
            embedding = FusedEmbedding(
                vector=np.asarray(self.chunk_fused[i], dtype=np.float64),
                alpha_used=self.config.alpha if has_visual else 1.0,
                has_visual=has_visual,
            )
            leaves.append(
                TreeNode(
                    node_id=chunk["chunk_id"],
                    level=0,
                    children=[],
                    summary_text=chunk["text"],
                    embedding=embedding,
                    token_set=self._leaf_token_loader(i, chunk),
                    source=[chunk["chunk_id"], *chunk["linked_images"]],
                )
            )
        return leaves

    # -- tree --------------------------------------------------------------
    def has_tree(self) -> bool:
        return (self.dir / "tree" / "nodes.jsonl").exists()

    def build(self, provider=None, force: bool = False) -> Tree:
        if self.has_tree() and not force:
            raise IndexStoreError("tree already built; pass force to rebuild")
        provider = provider or self.config.make_provider()
        cfg = TreeConfig(
            seed=self.config.seed,
            k_min=self.config.k_min,
            k_max=self.config.k_max,
            summary_budget=self.config.summary_budget,
            root_threshold=self.config.root_threshold,
        )
        tree = build_tree(self.leaf_nodes(), provider, cfg, alpha=self.config.alpha)
        self._write_tree(tree)
        return tree

    def _write_tree(self, tree: Tree) -> None:
        tmp = self.dir / f"tree.tmp-{os.getpid()}"
        if tmp.exists():
            shutil.rmtree(tmp)
        tmp.mkdir()
        summaries = sorted(
            (n for n in tree.nodes.values() if n.level > 0), key=lambda n: n.node_id
        )
        records = []
        emb = []
        token_blobs = []
        token_spans = []
        offset = 0
        for node in summaries:
            records.append(
                {
                    "node_id": node.node_id,
                    "level": node.level,
                    "children": node.children,
                    "summary_text": node.summary_text,
                }
            )
            emb.append(node.embedding.vector)
            ts = resolve_token_set(node)
            token_blobs.append(ts.vectors)
            token_spans.append([offset, ts.vectors.shape[0]])
            offset += ts.vectors.shape[0]
        _write_jsonl(tmp / "nodes.jsonl", records)
        _write_f32(tmp / "summary_emb.f32", np.stack(emb) if emb else np.zeros((0, TEXT_DIM)))
        _write_f32(
            tmp / "summary_tokens.f32",
            np.concatenate(token_blobs, axis=0) if token_blobs else np.zeros((0, TEXT_DIM)),
        )
        (tmp / "summary_tokens.json").write_text(json.dumps({"spans": token_spans}))
        (tmp / "root.json").write_text(json.dumps({"root_id": tree.root_id}))
        target = self.dir / "tree"
        if target.exists():
            shutil.rmtree(target)
        os.rename(tmp, target)

    def load_tree(self) -> Tree:
        tdir = self.dir / "tree"
        if not self.has_tree():
            raise IndexStoreError(f"index {self.dir} has no built tree; run build first")
        try:
            records = _read_jsonl(tdir / "nodes.jsonl")
            root_id = json.loads((tdir / "root.json").read_text())["root_id"]
            emb = _read_f32(tdir / "summary_emb.f32", (len(records), TEXT_DIM))
            meta = json.loads((tdir / "summary_tokens.json").read_text())
            spans = meta["spans"]
            total = sum(c for _, c in spans)
            tokens = _read_f32(tdir / "summary_tokens.f32", (total, TEXT_DIM))
        except (OSError, ValueError, KeyError) as exc:
            raise IndexStoreError(f"torn or invalid tree in {tdir}: {exc}") from exc
        nodes = {leaf.node_id: leaf for leaf in self.leaf_nodes()}
        for i, rec in enumerate(records):
            start, count = spans[i]
            vectors = np.asarray(tokens[start : start + count], dtype=np.float64)
            if vectors.shape[0] == 0:
                vectors = np.zeros((1, TEXT_DIM))
            nodes[rec["node_id"]] = TreeNode(
                node_id=rec["node_id"],
                level=int(rec["level"]),
                children=list(rec["children"]),
                summary_text=rec["summary_text"],
                embedding=FusedEmbedding(
                    vector=np.asarray(emb[i], dtype=np.float64), alpha_used=1.0, has_visual=False
                ),
                token_set=TokenEmbeddingSet(owner=rec["node_id"], vectors=vectors),
            )
        tree = Tree(root_id=root_id, nodes=nodes)
        for node in tree.nodes.values():
            for child in node.children:
                if child not in tree.nodes:
                    raise IndexStoreError(f"dangling child reference {child} in {node.node_id}")
        return tree

    # -- controller state and traces ---------------------------------------
    def load_state(self) -> StrategyState:
        return state_from_dict(json.loads((self.dir / "controller.json").read_text()))

    def save_state(self, state: StrategyState) -> None:
        tmp = self.dir / f"controller.json.tmp-{os.getpid()}"
        tmp.write_text(json.dumps(state_to_dict(state), sort_keys=True, indent=2))
        os.replace(tmp, self.dir / "controller.json")

    def append_trace(self, record: dict) -> None:
        with open(self.dir / "traces.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def find_trace(self, query_id: str) -> Optional[dict]:
        found = None
        path = self.dir / "traces.jsonl"
        if not path.exists():
            return None
        for rec in _read_jsonl(path):
            if rec.get("query_id") == query_id:
                found = rec
        return found


def digest(index_dir: str | Path, include_state: bool = False) -> str:
    """SHA-256 over index content; controller state and traces excluded by default."""
    index_dir = Path(index_dir)
    skip = set() if include_state else {"controller.json", "traces.jsonl"}
    h = hashlib.sha256()
    for path in sorted(p for p in index_dir.rglob("*") if p.is_file()):
        rel = path.relative_to(index_dir).as_posix()
        if rel in skip or rel == ".lock":
            continue
        h.update(rel.encode())
        h.update(path.read_bytes())
    return h.hexdigest()
