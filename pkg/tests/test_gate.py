import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sketchguide.gate import (
    GateAction,
    GateDecision,
    GateReason,
    GateState,
    evaluate,
    observe,
    skip_probability,
)
from sketchguide.imaging import GrayImage


def pair_with_similarity(x: float):
    """1x2 images whose cosine similarity is x, for x in [0, 1]."""
    a = GrayImage(np.array([[1.0, 0.0]]))
    b = GrayImage(np.array([[x, math.sqrt(1.0 - x * x)]]))
    return a, b


class TestSkipProbability:
    def test_boundary_at_tau(self):
        for tau in (0.0, 0.3, 0.9, 0.98):
            assert skip_probability(tau, tau) == 0.0

    def test_full_similarity(self):
        for tau in (0.0, 0.5, 0.95):
            assert skip_probability(1.0, tau) == 1.0

    def test_hand_value(self):
        assert skip_probability(0.95, 0.9) == pytest.approx(0.5, abs=1e-12)

    def test_clamped_below_tau(self):
        assert skip_probability(0.2, 0.9) == 0.0
        assert skip_probability(-1.0, 0.0) == 0.0

    def test_tau_at_one_rejected(self):
        with pytest.raises(ValueError):
            skip_probability(0.5, 1.0)

    @given(st.floats(-1.0, 1.0), st.floats(0.0, 0.98))
    def test_range_and_monotonicity(self, x, tau):
        p = skip_probability(x, tau)
        assert 0.0 <= p <= 1.0
        assert skip_probability(min(x + 0.01, 1.0), tau) >= p

    def test_one_only_at_full_similarity(self):
        assert skip_probability(0.999999, 0.9) < 1.0


class TestEvaluate:
    def test_first_input_generates(self):
        state = GateState.from_seed(tau=0.95, seed=1)
        sketch = GrayImage.full(4, 4, 0.5)
        decision, state2 = evaluate(state, sketch, "a cat")
        assert decision.action is GateAction.GENERATE
        assert decision.reason is GateReason.FIRST_INPUT
        assert state2.reference is sketch
        assert state2.last_prompt == "a cat"

    def test_identical_resketch_skips(self):
        state = GateState.from_seed(tau=0.9, seed=2)
        sketch = GrayImage.full(4, 4, 0.5)
        _, state = evaluate(state, sketch, "a cat")
        decision, _ = evaluate(state, sketch, "a cat")
        # x = 1 gives p = 1, so SKIP regardless of the draw
        assert decision.action is GateAction.SKIP
        assert decision.reason is GateReason.SAMPLED_SKIP
        assert decision.probability == 1.0

    def test_orthogonal_input_generates(self):
        a, _ = pair_with_similarity(0.0)
        b = GrayImage(np.array([[0.0, 1.0]]))
        state = GateState.from_seed(tau=0.9, seed=3)
        _, state = evaluate(state, a, "p")
        decision, _ = evaluate(state, b, "p")
        assert decision.action is GateAction.GENERATE
        assert decision.reason is GateReason.SAMPLED_GENERATE
        assert decision.probability == 0.0

    def test_prompt_change_forces_generate_at_full_similarity(self):
        state = GateState.from_seed(tau=0.9, seed=4)
        sketch = GrayImage.full(4, 4, 0.5)
        _, state = evaluate(state, sketch, "a cat")
        decision, state = evaluate(state, sketch, "a dog")
        assert decision.action is GateAction.GENERATE
        assert decision.reason is GateReason.PROMPT_CHANGED
        assert state.last_prompt == "a dog"

    def test_style_change_forces_generate(self):
        state = GateState.from_seed(tau=0.9, seed=5)
        sketch = GrayImage.full(4, 4, 0.5)
        _, state = evaluate(state, sketch, "a cat", style="anime")
        decision, _ = evaluate(state, sketch, "a cat", style="realistic")
        assert decision.reason is GateReason.PROMPT_CHANGED

    def test_reference_updates_on_skip(self):
        state = GateState.from_seed(tau=0.9, seed=6)
        first = GrayImage.full(4, 4, 0.5)
        second = GrayImage.full(4, 4, 0.25)
        _, state = evaluate(state, first, "p")
        decision, state = evaluate(state, second, "p")
        # scale-invariant similarity: x = 1 so this is a SKIP, yet the
        # reference must still advance to the latest input
        assert decision.action is GateAction.SKIP
        assert state.reference is second

    def test_observe_updates_without_consuming_randomness(self):
        s1 = GateState.from_seed(tau=0.9, seed=7)
        s2 = GateState.from_seed(tau=0.9, seed=7)
        sketch = GrayImage.full(4, 4, 0.5)
        other = GrayImage.full(4, 4, 0.75)
        s1 = observe(s1, sketch, "p")
        assert s1.reference is sketch
        d1, _ = evaluate(s1, other, "p")
        s2 = observe(s2, sketch, "p")
        d2, _ = evaluate(s2, other, "p")
        assert (d1.action, d1.reason) == (d2.action, d2.reason)

    def test_tau_validated(self):
        with pytest.raises(ValueError):
            GateState(tau=1.0, rng=np.random.default_rng(0))


class TestReproducibility:
    def test_decision_sequence_reproducible(self):
        a, b = pair_with_similarity(0.97)

        def run(seed):
            state = GateState(tau=0.9, rng=np.random.default_rng(seed), reference=a,
                              last_prompt="p", last_style="")
            actions = []
            for _ in range(64):
                decision, state = evaluate(state, b, "p")
                state = GateState(state.tau, state.rng, a, "p", "")
                actions.append(decision.action)
            return actions

        assert run(42) == run(42)
        assert run(42) != run(43)

    def test_empirical_rate_matches_formula(self):
        tau = 0.9
        x = 0.95
        a, b = pair_with_similarity(x)
        measured_x = None
        skips = 0
        n = 10_000
        for i in range(n):
            state = GateState(tau=tau, rng=np.random.default_rng(i), reference=a,
                              last_prompt="p", last_style="")
            decision, _ = evaluate(state, b, "p")
            measured_x = decision.similarity
            if decision.action is GateAction.SKIP:
                skips += 1
        expected = skip_probability(measured_x, tau)
        assert abs(skips / n - expected) < 0.02
