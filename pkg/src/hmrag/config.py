"""Engine configuration: one seed drives all randomness, recorded in the index."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional

from .controller import DEFAULT_BETA, DEFAULT_PHASE_PRIORS, T1, T2
from .corpus import DEFAULT_OVERLAP, DEFAULT_WINDOW
from .embedding import DEFAULT_ALPHA

PROVIDER_URL_ENV = "HMRAG_PROVIDER_URL"


@dataclass
class EngineConfig:
    seed: int = 0
    alpha: float = DEFAULT_ALPHA
    window: int = DEFAULT_WINDOW
    overlap: int = DEFAULT_OVERLAP
    beta: float = DEFAULT_BETA
    t1: float = T1
    t2: float = T2
    beam: int = 4
    top_k: int = 10
    k_min: int = 2
    k_max: int = 8
    summary_budget: int = 512
    root_threshold: int = 1
    multimodal: bool = True
    phase_priors: Dict[str, Dict[str, float]] = field(
        default_factory=lambda: {p: dict(v) for p, v in DEFAULT_PHASE_PRIORS.items()}
    )
    provider_transport: str = "local_deterministic"
    provider_address: Optional[str] = None
    provider_timeout_ms: int = 30_000
    provider_token: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "EngineConfig":
        cfg = cls() if path is None else cls.from_dict(json.loads(Path(path).read_text()))
        env_addr = os.environ.get(PROVIDER_URL_ENV)
        if env_addr:
            cfg.provider_address = env_addr
            cfg.provider_transport = "remote_http"
        return cfg

    def make_provider(self):
        from .providers import make_provider

        return make_provider(
            self.provider_transport,
            address=self.provider_address,
            seed=self.seed,
            timeout_ms=self.provider_timeout_ms,
            token=self.provider_token,
        )
