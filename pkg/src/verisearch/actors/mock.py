"""Scripted actors for tests: a replaying generator and callable verifiers."""
from __future__ import annotations

import math
from typing import AbstractSet, Callable, Sequence

from .base import (
    ActorBundle,
    CallCounterRng,
    Generator,
    PathVerifier,
    Segment,
    StepVerifier,
    ban_penalty,
    clamp_score,
)

# (token, logprob) or (token, logprob, ended)
ScriptEntry = Sequence[object]


class MockScriptError(KeyError):
    """The script has no continuation for a queried context, or every
    scripted alternative is banned: a test-fixture gap."""


def _entry(raw: ScriptEntry, default_ended: bool) -> tuple[str, float, bool]:
    token, logprob = str(raw[0]), float(raw[1])  # type: ignore[index]
    ended = bool(raw[2]) if len(raw) > 2 else default_ended  # type: ignore[index]
    if logprob > 0.0:
        raise ValueError(f"scripted log-probability {logprob} is above 0")
    return token, logprob, ended


class MockGenerator(Generator):
    """Replays a context -> scored-continuations script verbatim.

    Each scripted continuation is one opaque token. For generate_segment the
    continuation ends the sequence only when the entry says so; for complete
    it is the whole completion and ends the sequence unless the entry says
    otherwise. Anything the script does not cover is an error."""

    def __init__(self, script, seed: int = 0):
        self._script = script
        self._rng = CallCounterRng(seed)

    def _lookup(self, context: str) -> list[ScriptEntry]:
        try:
            alternatives = self._script[context]
        except KeyError:
            raise MockScriptError(f"unscripted context: {context!r}") from None
        if not alternatives:
            raise MockScriptError(f"script has no continuations for context: {context!r}")
        return list(alternatives)

    def _choose(
        self, entries: list[tuple[str, float, bool]], temperature: float, context: str
    ) -> tuple[str, float, bool]:
        if temperature <= 0.0 or len(entries) == 1:
            return max(entries, key=lambda e: e[1])
        weights = [math.exp(lp / temperature) for _, lp, _ in entries]
        rng = self._rng.draw(context)
        return rng.choices(entries, weights=weights, k=1)[0]

    def generate_segment(
        self,
        context: str,
        width: int,
        max_tokens: int,
        temperature: float,
        banned_first_tokens: AbstractSet[str] = frozenset(),
    ) -> Segment:
        entries = [_entry(raw, default_ended=False) for raw in self._lookup(context)]
        if banned_first_tokens:
            allowed = [e for e in entries if e[0] not in banned_first_tokens]
            if not allowed:
                raise MockScriptError(
                    f"all scripted continuations banned for context: {context!r}"
                )
            entries = allowed
        token, logprob, ended = self._choose(entries, temperature, context)
        return Segment(tokens=(token,), logprobs=(logprob,), ended=ended)

    def complete(self, context: str, max_tokens: int, temperature: float) -> Segment:
        entries = [_entry(raw, default_ended=True) for raw in self._lookup(context)]
        token, logprob, ended = self._choose(entries, temperature, context)
        return Segment(tokens=(token,), logprobs=(logprob,), ended=ended)


def mock_generator(script, seed: int = 0) -> MockGenerator:
    """Build a generator that replays the given context -> continuations map."""
    return MockGenerator(script, seed=seed)


class CallableStepVerifier(StepVerifier):
    def __init__(self, fn: Callable[[str, str], float]):
        self._fn = fn

    def score_partial(self, question: str, partial_path: str) -> float:
        return clamp_score(self._fn(question, partial_path))


class CallablePathVerifier(PathVerifier):
    def __init__(self, fn: Callable[[str, str], float]):
        self._fn = fn

    def score_path(self, question: str, path: str) -> float:
        return clamp_score(self._fn(question, path))


def mock_actor_bundle(
    script,
    step_fn: Callable[[str, str], float] = lambda q, p: 0.5,
    path_fn: Callable[[str, str], float] = lambda q, p: 0.5,
    text_ppl: Callable[[str], float] | None = None,
    seed: int = 0,
) -> ActorBundle:
    return ActorBundle(
        generator=mock_generator(script, seed=seed),
        step_verifier=CallableStepVerifier(step_fn),
        path_verifier=CallablePathVerifier(path_fn),
        text_ppl=text_ppl,
    )


__all__ = [
    "MockGenerator",
    "MockScriptError",
    "CallableStepVerifier",
    "CallablePathVerifier",
    "mock_generator",
    "mock_actor_bundle",
    "ban_penalty",
]
