"""Corpus ingestion: page manifests, tokenization, and overlapping chunking.

The manifest is line-delimited JSON, one page per line, with fields
``doc_id``, ``page_no``, ``text``, ``section_breaks``, ``image_refs``.
A sibling ``<stem>.assets.jsonl`` file maps each ``image_id`` to a file
path on disk.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List

DEFAULT_WINDOW = 800
DEFAULT_OVERLAP = 150

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class ManifestError(ValueError):
    """Raised when a corpus manifest is malformed."""


@dataclass(frozen=True)
class PageRecord:
    doc_id: str
    page_no: int
    text: str
    section_breaks: List[int] = field(default_factory=list)
    image_refs: List[str] = field(default_factory=list)


@dataclass(frozen=True)
class ImageAsset:
    image_id: str
    doc_id: str
    page_no: int
    file_path: str
    caption: str | None = None


@dataclass(frozen=True)
class TextChunk:
    chunk_id: str
    doc_id: str
    page_no: int
    token_span: tuple  # [start, end)
    text: str
    linked_images: List[str] = field(default_factory=list)


@dataclass
class Corpus:
    pages: List[PageRecord]
    assets: List[ImageAsset]

    def asset_by_id(self, image_id: str) -> ImageAsset:
        for a in self.assets:
            if a.image_id == image_id:
                return a
        raise KeyError(image_id)


def tokenize(text: str) -> List[str]:
    """Whitespace split with each punctuation character detached as its own token."""
    return _TOKEN_RE.findall(text)


def detokenize(tokens: List[str]) -> str:
    return " ".join(tokens)


def assets_path_for(manifest_path: Path) -> Path:
    manifest_path = Path(manifest_path)
    stem = manifest_path.name
    if stem.endswith(".jsonl"):
        stem = stem[: -len(".jsonl")]
    return manifest_path.with_name(stem + ".assets.jsonl")


def load_manifest(path: str | Path) -> Corpus:
    """Load pages and image assets, validating references and ordering by (doc_id, page_no)."""
    path = Path(path)
    pages: List[PageRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                page = PageRecord(
                    doc_id=str(rec["doc_id"]),
                    page_no=int(rec["page_no"]),
                    text=str(rec["text"]),
                    section_breaks=[int(b) for b in rec.get("section_breaks", [])],
                    image_refs=[str(r) for r in rec.get("image_refs", [])],
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ManifestError(f"{path}:{lineno}: malformed page record: {exc}") from exc
            if page.page_no < 1:
                raise ManifestError(f"{path}:{lineno}: page_no must be >= 1")
            ntok = len(tokenize(page.text))
            breaks = page.section_breaks
            if any(b <= 0 or b >= ntok for b in breaks) or sorted(set(breaks)) != breaks:
                raise ManifestError(
                    f"{path}:{lineno}: section_breaks must be strictly increasing and inside (0, {ntok})"
                )
            pages.append(page)

    assets: List[ImageAsset] = []
    seen_ids: set[str] = set()
    apath = assets_path_for(path)
    if apath.exists():
        with open(apath, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    asset = ImageAsset(
                        image_id=str(rec["image_id"]),
                        doc_id=str(rec["doc_id"]),
                        page_no=int(rec["page_no"]),
                        file_path=str(rec["file_path"]),
                    )
                except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                    raise ManifestError(f"{apath}:{lineno}: malformed asset record: {exc}") from exc
                if asset.image_id in seen_ids:
                    raise ManifestError(f"{apath}:{lineno}: duplicate image_id {asset.image_id!r}")
                seen_ids.add(asset.image_id)
                fp = Path(asset.file_path)
                if not fp.is_absolute():
                    fp = path.parent / fp
                if not fp.exists():
                    raise ManifestError(
                        f"{apath}:{lineno}: image file missing for {asset.image_id!r}: {fp}"
                    )
                assets.append(replace(asset, file_path=str(fp)))

    for page in pages:
        for ref in page.image_refs:
            if ref not in seen_ids:
                raise ManifestError(f"page {page.doc_id}/{page.page_no}: unresolved image ref {ref!r}")

    pages.sort(key=lambda p: (p.doc_id, p.page_no))
    assets.sort(key=lambda a: (a.doc_id, a.page_no, a.image_id))
    return Corpus(pages=pages, assets=assets)


def chunk_page(
    page: PageRecord,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
) -> List[TextChunk]:
    """Sliding-window chunks with fixed overlap; the window restarts at every section break."""
    if not window > overlap >= 0:
        raise ValueError(f"require window > overlap >= 0, got {window}/{overlap}")
    tokens = tokenize(page.text)
    if not tokens:
        return []
    bounds = [0] + [b for b in page.section_breaks if 0 < b < len(tokens)] + [len(tokens)]
    chunks: List[TextChunk] = []
    for sec_start, sec_end in zip(bounds, bounds[1:]):
        start = sec_start
        while True:
            end = min(start + window, sec_end)
            idx = len(chunks)
            chunks.append(
                TextChunk(
                    chunk_id=f"{page.doc_id}-p{page.page_no}-c{idx}",
                    doc_id=page.doc_id,
                    page_no=page.page_no,
                    token_span=(start, end),
                    text=detokenize(tokens[start:end]),
                )
            )
            if end >= sec_end:
                break
            start = end - overlap
    return chunks


def associate_images(page: PageRecord, chunks: List[TextChunk]) -> List[TextChunk]:
    """Link every image on the page to every chunk of that page, in manifest order."""
    for c in chunks:
        if c.doc_id != page.doc_id or c.page_no != page.page_no:
            raise ValueError(f"chunk {c.chunk_id} does not belong to page {page.doc_id}/{page.page_no}")
    refs = list(page.image_refs)
    return [replace(c, linked_images=list(refs)) for c in chunks]


def chunk_corpus(corpus: Corpus, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> List[TextChunk]:
    out: List[TextChunk] = []
    for page in corpus.pages:
        out.extend(associate_images(page, chunk_page(page, window, overlap)))
    return out
