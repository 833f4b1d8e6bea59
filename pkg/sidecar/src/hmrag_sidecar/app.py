"""FastAPI application exposing the provider wire contract.

  POST /embed_text  {"texts": [...]}                 -> {"embeddings": [[f32 x 1024], ...]}
  POST /embed_image {"image_b64": ...}               -> {"caption": ..., "embedding": [f32 x 768]}
  POST /summarize   {"texts": [...], "budget": n}    -> {"summary": ...}
  POST /classify    {"query": ..., "context": [...]} -> {"distribution": {...}}
  GET  /health                                       -> dimensions and backend info

The service is stateless; every request is handled in isolation.
"""

from __future__ import annotations

import base64
import binascii
from typing import Dict, List, Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from . import TEXT_DIM, VISUAL_DIM, __version__
from .backends import make_backend
from .config import SidecarConfig


class EmbedTextRequest(BaseModel):
    texts: List[str] = Field(min_length=1)


class EmbedImageRequest(BaseModel):
    image_b64: str = Field(min_length=1)


class SummarizeRequest(BaseModel):
    texts: List[str] = Field(min_length=1)
    budget: int = Field(ge=1)


class ClassifyRequest(BaseModel):
    query: str = Field(min_length=1)
    context: List[str] = Field(default_factory=list)


def create_app(config: Optional[SidecarConfig] = None) -> FastAPI:
    config = config or SidecarConfig()
    backend = make_backend(config)
    app = FastAPI(title="hmrag model sidecar", version=__version__)

    def check_auth(request: Request) -> None:
        if config.token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {config.token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def check_batch(n: int) -> None:
        if n > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {n} exceeds max_batch={config.max_batch}",
            )

    @app.get("/health")
    def health() -> Dict:
        return {
            "status": "ok",
            "version": __version__,
            "text_dim": TEXT_DIM,
            "visual_dim": VISUAL_DIM,
            "backend": type(backend).__name__,
            "max_batch": config.max_batch,
        }

    @app.post("/embed_text", dependencies=[Depends(check_auth)])
    def embed_text(body: EmbedTextRequest) -> Dict:
        check_batch(len(body.texts))
        return {"embeddings": backend.embed_text(body.texts)}

    @app.post("/embed_image", dependencies=[Depends(check_auth)])
    def embed_image(body: EmbedImageRequest) -> Dict:
        try:
            data = base64.b64decode(body.image_b64, validate=True)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=400, detail="image_b64 is not valid base64")
        if not data:
            raise HTTPException(status_code=400, detail="empty image payload")
        caption, embedding = backend.embed_image(data)
        return {"caption": caption, "embedding": embedding}

    @app.post("/summarize", dependencies=[Depends(check_auth)])
    def summarize(body: SummarizeRequest) -> Dict:
        check_batch(len(body.texts))
        return {"summary": backend.summarize(body.texts, body.budget)}

    @app.post("/classify", dependencies=[Depends(check_auth)])
    def classify(body: ClassifyRequest) -> Dict:
        return {"distribution": backend.classify(body.query)}

    return app
