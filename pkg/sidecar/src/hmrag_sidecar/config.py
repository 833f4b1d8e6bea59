"""Sidecar configuration: model identifiers per capability plus serving knobs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


@dataclass
class SidecarConfig:
    # "hash" selects the deterministic built-in backend; any other identifier
    # is treated as a neural model name to load at startup.
    embed_text_model: str = "hash"
    embed_image_model: str = "hash"
    summarize_model: str = "hash"
    classify_model: str = "hash"
    host: str = "127.0.0.1"
    port: int = 8089
    max_batch: int = 64
    token: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if not 0 < self.port < 65536:
            raise ValueError(f"invalid port {self.port}")
