import math

import pytest

from verisearch.actors.base import Segment, ban_penalty
from verisearch.actors.mock import MockScriptError, mock_generator


class TestMockReplay:
    def test_scripted_continuation(self):
        gen = mock_generator({"Q:": [("a", -0.1)]})
        segment = gen.generate_segment("Q:", width=5, max_tokens=10, temperature=0.0)
        assert segment.tokens == ("a",)
        assert segment.logprobs == (-0.1,)

    def test_unscripted_context_errors(self):
        gen = mock_generator({"Q:": [("a", -0.1)]})
        with pytest.raises(MockScriptError, match="unscripted"):
            gen.generate_segment("X", width=5, max_tokens=10, temperature=0.0)

    def test_all_alternatives_banned_errors(self):
        gen = mock_generator({"Q:": [("a", -0.1)]})
        with pytest.raises(MockScriptError, match="banned"):
            gen.generate_segment(
                "Q:", width=5, max_tokens=10, temperature=0.0, banned_first_tokens={"a"}
            )

    def test_temperature_zero_takes_argmax(self):
        gen = mock_generator({"Q:": [("low", -2.0), ("high", -0.5)]})
        for _ in range(5):
            seg = gen.generate_segment("Q:", width=5, max_tokens=10, temperature=0.0)
            assert seg.tokens == ("high",)

    def test_complete_defaults_to_ended(self):
        gen = mock_generator({"Q:": [("done", -0.3)]})
        assert gen.complete("Q:", max_tokens=10, temperature=0.0).ended is True

    def test_segment_defaults_to_not_ended(self):
        gen = mock_generator({"Q:": [("more", -0.3)]})
        assert gen.generate_segment("Q:", width=1, max_tokens=10, temperature=0.0).ended is False

    def test_explicit_ended_flag(self):
        gen = mock_generator({"Q:": [("tail", -0.3, True)]})
        assert gen.generate_segment("Q:", width=1, max_tokens=10, temperature=0.0).ended is True

    def test_positive_logprob_rejected(self):
        gen = mock_generator({"Q:": [("a", 0.5)]})
        with pytest.raises(ValueError):
            gen.generate_segment("Q:", width=1, max_tokens=10, temperature=0.0)

    def test_banned_tokens_never_sampled(self):
        script = {"Q:": [("a", math.log(0.5)), ("b", math.log(0.3)), ("c", math.log(0.2))]}
        gen = mock_generator(script, seed=3)
        for _ in range(1000):
            seg = gen.generate_segment(
                "Q:", width=3, max_tokens=5, temperature=1.0, banned_first_tokens={"a"}
            )
            assert seg.tokens[0] != "a"

    def test_sampling_replays_identically_for_fresh_instances(self):
        script = {"Q:": [("a", math.log(0.5)), ("b", math.log(0.5))]}
        first = [
            mock_generator(script, seed=11).complete("Q:", 5, 1.0).tokens for _ in range(1)
        ]
        gen1 = mock_generator(script, seed=11)
        gen2 = mock_generator(script, seed=11)
        draws1 = [gen1.complete("Q:", 5, 1.0).tokens for _ in range(20)]
        draws2 = [gen2.complete("Q:", 5, 1.0).tokens for _ in range(20)]
        assert draws1 == draws2
        assert len(set(draws1)) > 1  # temperature sampling actually varies
        assert first[0] == draws1[0]


class TestBanPenalty:
    def test_empty_ban_is_identity(self):
        alternatives = [("a", 0.6), ("b", 0.4)]
        penalized, degenerate = ban_penalty(alternatives, frozenset())
        assert penalized == alternatives
        assert degenerate is False

    def test_renormalization(self):
        penalized, degenerate = ban_penalty([("a", 0.6), ("b", 0.4)], {"a"})
        assert penalized == [("b", 1.0)]
        assert degenerate is False

    def test_all_banned_restores_and_flags(self):
        original = [("a", 0.6), ("b", 0.4)]
        penalized, degenerate = ban_penalty(original, {"a", "b"})
        assert penalized == original
        assert degenerate is True

    def test_empty_alternatives_rejected(self):
        with pytest.raises(ValueError):
            ban_penalty([], {"a"})


class TestSegment:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Segment(tokens=("a",), logprobs=(-0.5, -0.5))

    def test_text_concatenates(self):
        assert Segment(("ab ", "cd."), (-0.1, -0.2)).text == "ab cd."
