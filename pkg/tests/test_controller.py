import math

import pytest

from hmrag.controller import (
    BANDS,
    CANONICAL,
    DEFAULT_BETA,
    STRATEGIES,
    T1,
    T2,
    PhaseProfile,
    RoutingTrace,
    StrategyState,
    band_of,
    entropy,
    route,
    select_strategy,
    state_from_dict,
    state_to_dict,
    update,
)
from hmrag.providers import ClassDistribution, LocalProvider
from oracles import entropy_base4


def dist(*probs):
    return ClassDistribution(*probs)


class TestEntropy:
    def test_one_hot_is_zero(self):
        assert entropy(dist(1.0, 0.0, 0.0, 0.0)) == 0.0

    def test_uniform_is_one(self):
        assert entropy(dist(0.25, 0.25, 0.25, 0.25)) == pytest.approx(1.0, abs=1e-12)

    def test_two_way_split(self):
        assert entropy(dist(0.5, 0.5, 0.0, 0.0)) == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize(
        "probs",
        [
            (0.7, 0.1, 0.1, 0.1),
            (0.4, 0.3, 0.2, 0.1),
            (0.9, 0.05, 0.03, 0.02),
            (0.25, 0.25, 0.3, 0.2),
        ],
    )
    def test_matches_high_precision_oracle(self, probs):
        assert entropy(dist(*probs)) == pytest.approx(entropy_base4(probs), abs=1e-12)

    def test_invalid_distribution_rejected(self):
        with pytest.raises(ValueError):
            entropy(dist(0.5, 0.5, 0.5, 0.5))


class TestBands:
    def test_thresholds(self):
        assert (T1, T2) == (0.3, 0.7)

    @pytest.mark.parametrize(
        "h,band",
        [
            (0.0, "low"),
            (0.29999, "low"),
            (0.3, "medium"),
            (0.5, "medium"),
            (0.69999, "medium"),
            (0.7, "high"),
            (1.0, "high"),
        ],
    )
    def test_band_of(self, h, band):
        assert band_of(h) == band

    def test_out_of_range(self):
        for h in (-0.1, 1.1):
            with pytest.raises(ValueError):
                band_of(h)


class TestStrategyState:
    def test_fresh_scores(self):
        state = StrategyState.fresh()
        for band in BANDS:
            for strat in STRATEGIES:
                expected = 0.8 if CANONICAL[band] == strat else 0.1
                assert state.scores[(band, strat)] == expected
        assert state.beta == DEFAULT_BETA == 0.9
        assert state.update_count == 0

    def test_fresh_bad_beta(self):
        for beta in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                StrategyState.fresh(beta=beta)

    def test_roundtrip_dict(self):
        state = update(StrategyState.fresh(), "low", "DirectSearch", 0.4)
        again = state_from_dict(state_to_dict(state))
        assert again == state


class TestSelect:
    def test_fresh_state_neutral_phase_is_canonical(self):
        state = StrategyState.fresh()
        phase = PhaseProfile.neutral()
        for band in BANDS:
            assert select_strategy(band, state, phase) == CANONICAL[band]

    def test_phase_prior_can_flip(self):
        # Push the high-band fusion score down until the rescue prior on
        # DirectSearch (1.5x) outweighs it.
        state = StrategyState.fresh()
        for _ in range(40):
            state = update(state, "high", "MultimodalFusion", 0.0)
        rescue = PhaseProfile.for_phase("rescue")
        assert select_strategy("high", state, rescue) == "DirectSearch"

    def test_tie_goes_to_canonical(self):
        scores = {(b, s): 0.5 for b in BANDS for s in STRATEGIES}
        state = StrategyState(scores=scores)
        phase = PhaseProfile.neutral()
        for band in BANDS:
            assert select_strategy(band, state, phase) == CANONICAL[band]

    def test_unknown_band(self):
        with pytest.raises(ValueError):
            select_strategy("ultra", StrategyState.fresh(), PhaseProfile.neutral())


class TestUpdate:
    def test_single_step(self):
        state = update(StrategyState.fresh(), "low", "DirectSearch", 1.0)
        assert state.scores[("low", "DirectSearch")] == pytest.approx(
            0.9 * 0.8 + 0.1 * 1.0, abs=1e-12)
        assert state.update_count == 1

    def test_other_cells_untouched(self):
        before = StrategyState.fresh()
        after = update(before, "low", "DirectSearch", 0.0)
        for key, val in before.scores.items():
            if key != ("low", "DirectSearch"):
                assert after.scores[key] == val

    def test_closed_form_sequence(self):
        rewards = [0.2, 0.9, 0.4, 1.0, 0.0]
        state = StrategyState.fresh(beta=0.9)
        expected = 0.8
        for r in rewards:
            state = update(state, "medium", "HierarchicalTraversal", r)
            expected = 0.9 * expected + 0.1 * r
        assert state.scores[("medium", "HierarchicalTraversal")] == pytest.approx(
            expected, abs=1e-12)

    def test_reward_bounds(self):
        for r in (-0.1, 1.5):
            with pytest.raises(ValueError):
                update(StrategyState.fresh(), "low", "DirectSearch", r)

    def test_immutable_input(self):
        before = StrategyState.fresh()
        update(before, "low", "DirectSearch", 0.0)
        assert before.scores[("low", "DirectSearch")] == 0.8


class TestPhaseProfile:
    def test_default_priors(self):
        assert PhaseProfile.for_phase("rescue").prior["DirectSearch"] == 1.5
        assert PhaseProfile.for_phase("recovery").prior["HierarchicalTraversal"] == 1.5
        assert PhaseProfile.for_phase("reconstruction").prior["MultimodalFusion"] == 1.25

    def test_response_styles(self):
        assert PhaseProfile.for_phase("rescue").response_style == "concise_procedural"
        assert PhaseProfile.for_phase("recovery").response_style == "synthesized_planning"
        assert PhaseProfile.for_phase("reconstruction").response_style == "analytical"

    def test_unknown_phase(self):
        with pytest.raises(ValueError):
            PhaseProfile.for_phase("peacetime")

    def test_nonpositive_prior(self):
        with pytest.raises(ValueError):
            PhaseProfile.for_phase("rescue", priors={
                "rescue": {"DirectSearch": 0.0, "HierarchicalTraversal": 1.0,
                           "MultimodalFusion": 1.0}})


class TestRoute:
    def test_full_trace(self):
        trace = route("how to shut off gas line", (), StrategyState.fresh(),
                      PhaseProfile.for_phase("rescue"), LocalProvider(seed=0))
        assert isinstance(trace, RoutingTrace)
        assert trace.entropy == 0.0
        assert trace.band == "low"
        assert trace.strategy == "DirectSearch"

    def test_uniform_routes_high(self):
        trace = route("zebra quantum", (), StrategyState.fresh(),
                      PhaseProfile.neutral(), LocalProvider(seed=0))
        assert trace.band == "high"
        assert trace.strategy == "MultimodalFusion"

    def test_empty_query(self):
        with pytest.raises(ValueError):
            route("", (), StrategyState.fresh(), PhaseProfile.neutral(), LocalProvider())
