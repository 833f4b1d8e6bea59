"""Entropy-aware strategy routing with EMA feedback adaptation and phase priors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Sequence, Tuple

from .providers import ClassDistribution

STRATEGIES = ("DirectSearch", "HierarchicalTraversal", "MultimodalFusion")
BANDS = ("low", "medium", "high")

T1 = 0.3
T2 = 0.7
DEFAULT_BETA = 0.9

# The canonical band -> strategy mapping; also the cold-start preference.
CANONICAL = {
    "low": "DirectSearch",
    "medium": "HierarchicalTraversal",
    "high": "MultimodalFusion",
}

PHASES = ("rescue", "recovery", "reconstruction")

DEFAULT_PHASE_PRIORS: Dict[str, Dict[str, float]] = {
    "rescue": {"DirectSearch": 1.5, "HierarchicalTraversal": 1.0, "MultimodalFusion": 1.0},
    "recovery": {"DirectSearch": 1.0, "HierarchicalTraversal": 1.5, "MultimodalFusion": 1.0},
    "reconstruction": {"DirectSearch": 1.0, "HierarchicalTraversal": 1.0, "MultimodalFusion": 1.25},
}

RESPONSE_STYLES = {
    "rescue": "concise_procedural",
    "recovery": "synthesized_planning",
    "reconstruction": "analytical",
}


@dataclass(frozen=True)
class PhaseProfile:
    phase: str
    prior: Dict[str, float]
    response_style: str

    @classmethod
    def for_phase(cls, phase: str, priors: Dict[str, Dict[str, float]] | None = None) -> "PhaseProfile":
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}; valid phases: {', '.join(PHASES)}")
        table = priors or DEFAULT_PHASE_PRIORS
        prior = dict(table[phase])
        if any(m <= 0 for m in prior.values()):
            raise ValueError("phase prior multipliers must be positive")
        return cls(phase=phase, prior=prior, response_style=RESPONSE_STYLES[phase])

    @classmethod
    def neutral(cls) -> "PhaseProfile":
        return cls(phase="rescue", prior={s: 1.0 for s in STRATEGIES}, response_style="concise_procedural")


@dataclass(frozen=True)
class StrategyState:
    """Per-(band, strategy) EMA scores; the controller's learned memory."""

    scores: Dict[Tuple[str, str], float]
    beta: float = DEFAULT_BETA
    update_count: int = 0

    @classmethod
    def fresh(cls, beta: float = DEFAULT_BETA) -> "StrategyState":
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must be in (0,1), got {beta}")
        scores = {
            (band, strat): 0.8 if CANONICAL[band] == strat else 0.1
            for band in BANDS
            for strat in STRATEGIES
        }
        return cls(scores=scores, beta=beta)


def entropy(dist: ClassDistribution) -> float:
    """Shannon entropy in base 4, so a uniform distribution maps to exactly 1."""
    dist.validate()
    h = 0.0
    for p in dist.as_tuple():
        if p > 0.0:
            h -= p * math.log(p)
    return h / math.log(4.0)


def band_of(h: float) -> str:
    if not -1e-12 <= h <= 1.0 + 1e-12:
        raise ValueError(f"entropy must be in [0,1], got {h}")
    if h < T1:
        return "low"
    if h < T2:
        return "medium"
    return "high"


def select_strategy(band: str, state: StrategyState, phase: PhaseProfile) -> str:
    """argmax of EMA score x phase prior; ties go to the band's canonical strategy."""
    if band not in BANDS:
        raise ValueError(f"unknown band {band!r}")
    # Canonical strategy first so exact ties resolve to it.
    order = [CANONICAL[band]] + [s for s in STRATEGIES if s != CANONICAL[band]]
    best, best_score = None, -math.inf
    for strat in order:
        score = state.scores[(band, strat)] * phase.prior[strat]
        if score > best_score:
            best, best_score = strat, score
    return best


def update(state: StrategyState, band: str, strategy: str, reward: float) -> StrategyState:
    """EMA update of one (band, strategy) cell: beta * old + (1 - beta) * reward."""
    if band not in BANDS or strategy not in STRATEGIES:
        raise ValueError(f"unknown band/strategy {band!r}/{strategy!r}")
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must be in [0,1], got {reward}")
    scores = dict(state.scores)
    scores[(band, strategy)] = state.beta * scores[(band, strategy)] + (1.0 - state.beta) * reward
    return replace(state, scores=scores, update_count=state.update_count + 1)


@dataclass(frozen=True)
class RoutingTrace:
    distribution: ClassDistribution
    entropy: float
    band: str
    strategy: str


def route(
    query: str,
    context_tags: Sequence[str],
    state: StrategyState,
    phase: PhaseProfile,
    classifier,
) -> RoutingTrace:
    """classify -> entropy -> band -> select, returning the full trace."""
    if not query:
        raise ValueError("query must be non-empty")
    dist = classifier.classify_query(query, context_tags)
    h = entropy(dist)
    band = band_of(h)
    strategy = select_strategy(band, state, phase)
    return RoutingTrace(distribution=dist, entropy=h, band=band, strategy=strategy)


def state_to_dict(state: StrategyState) -> dict:
    return {
        "beta": state.beta,
        "update_count": state.update_count,
        "scores": {
            band: {strat: state.scores[(band, strat)] for strat in STRATEGIES}
            for band in BANDS
        },
    }


def state_from_dict(data: dict) -> StrategyState:
    scores = {
        (band, strat): float(data["scores"][band][strat])
        for band in BANDS
        for strat in STRATEGIES
    }
    return StrategyState(
        scores=scores, beta=float(data["beta"]), update_count=int(data["update_count"])
    )
