"""Deterministic procedurally-generated scripts and bundles for fuzzing the
search engine with mock actors."""
from __future__ import annotations

import random

from verisearch.actors.base import ActorBundle, stable_rng
from verisearch.actors.mock import CallablePathVerifier, CallableStepVerifier, mock_generator
from verisearch.search import SearchConfig


class ProceduralScript:
    """A replayable context -> continuations map over an unbounded context
    space: every lookup derives the same alternatives from a hash of the
    context. Behaves like a huge literal script."""

    def __init__(self, seed: int, branching: int = 48, end_prob: float = 0.45,
                 answer_prob: float = 0.8):
        self.seed = seed
        self.branching = branching
        self.end_prob = end_prob
        self.answer_prob = answer_prob

    def __getitem__(self, context: str) -> list[tuple[str, float, bool]]:
        rng = stable_rng(self.seed, "script", context)
        alternatives = []
        for index in range(self.branching):
            ended = rng.random() < self.end_prob
            word = f"w{index}_{rng.randrange(10**6)}"
            if ended and rng.random() < self.answer_prob:
                token = f"{word} [ANS] {rng.randint(0, 12)}."
            else:
                token = f"{word} "
            alternatives.append((token, -rng.uniform(0.05, 3.0), ended))
        return alternatives


def hashed_verifier_fn(seed: int, salt: str):
    def fn(question: str, path: str) -> float:
        return stable_rng(seed, salt, question, path).random()

    return fn


def fuzz_bundle(seed: int, branching: int = 48) -> ActorBundle:
    """Mock actors with procedurally scripted continuations and hashed
    (deterministic, input-dependent) verifier scores."""
    return ActorBundle(
        generator=mock_generator(ProceduralScript(seed, branching=branching), seed=seed),
        step_verifier=CallableStepVerifier(hashed_verifier_fn(seed, "step")),
        path_verifier=CallablePathVerifier(hashed_verifier_fn(seed, "path")),
    )


def random_config(rng: random.Random, iterations: int) -> SearchConfig:
    path_max = rng.choice([2, 3, 6, 400])
    return SearchConfig(
        c_puct=rng.choice([0.0, 0.5, 1.25, 2.5]),
        alpha=rng.choice([0.0, 0.1, 0.5, 1.0]),
        iterations=iterations,
        expansion_width=rng.choice([1, 2, 3, 20]),
        rollout_max_tokens=min(rng.choice([1, 2, 5, 300]), path_max),
        path_max_tokens=path_max,
        select_prob=rng.choice([0.0, 0.25, 0.5, 0.75, 1.0]),
        temperature=rng.choice([0.4, 0.7, 1.0]),
        rng_seed=rng.getrandbits(32),
    )
