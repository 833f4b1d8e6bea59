"""Low-rank adapter delta math: W = W0 + B @ A, plus parameter accounting.

Adapter files are a small JSON header line followed by the A then B payloads
as little-endian 32-bit floats, row-major.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_RANK = 16


@dataclass(frozen=True)
class LoraAdapter:
    A: np.ndarray  # (r, d)
    B: np.ndarray  # (d, r)

    def __post_init__(self):
        r, d = self.A.shape
        if self.B.shape != (d, r):
            raise ValueError(f"inconsistent shapes A={self.A.shape} B={self.B.shape}")
        if r > d:
            raise ValueError(f"rank {r} exceeds dimension {d}")

    @property
    def r(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def delta(self) -> np.ndarray:
        return self.B @ self.A


def apply_delta(w0: np.ndarray, adapter: LoraAdapter) -> np.ndarray:
    w0 = np.asarray(w0, dtype=np.float64)
    if w0.shape != (adapter.d, adapter.d):
        raise ValueError(f"weight shape {w0.shape} does not match adapter d={adapter.d}")
    return w0 + adapter.delta()


def param_savings(d: int, r: int) -> float:
    """Adapter parameter count relative to the full d x d matrix: 2dr / d^2."""
    if not 1 <= r <= d:
        raise ValueError(f"require 1 <= r <= d, got r={r}, d={d}")
    return (2.0 * d * r) / (d * d)


def save_adapter(adapter: LoraAdapter, path: str | Path) -> None:
    header = json.dumps({"r": adapter.r, "d": adapter.d}).encode("ascii") + b"\n"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(adapter.A.astype("<f4").tobytes())
        fh.write(adapter.B.astype("<f4").tobytes())


def load_adapter(path: str | Path) -> LoraAdapter:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        r, d = int(header["r"]), int(header["d"])
        a = np.frombuffer(fh.read(4 * r * d), dtype="<f4").reshape(r, d).astype(np.float64)
        b = np.frombuffer(fh.read(4 * d * r), dtype="<f4").reshape(d, r).astype(np.float64)
    return LoraAdapter(A=a, B=b)
