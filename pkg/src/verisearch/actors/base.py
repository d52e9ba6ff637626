"""Generator and verifier interfaces.

The fast system proposes token segments; the deliberate system scores
partial and complete reasoning paths. Tokens are opaque string units owned
by the generator: a path's text is the plain concatenation of its tokens,
so generators embed their own spacing. The context handed to a generator is
always ``question + "\\n" + path_so_far`` (see :func:`build_context`).
"""
from __future__ import annotations

import abc
import hashlib
import random
import threading
from dataclasses import dataclass, field
from typing import AbstractSet, Callable, Sequence


@dataclass(frozen=True)
class Segment:
    """A generated token sequence with per-token log-probabilities.

    ``ended`` marks that the generator reached its natural end of sequence
    inside this segment. ``degenerate`` marks that every first-token
    alternative was banned and the unpenalized distribution was used."""

    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]
    ended: bool = False
    degenerate: bool = False

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.logprobs):
            raise ValueError("token/log-probability length mismatch")

    @property
    def text(self) -> str:
        return "".join(self.tokens)


class Generator(abc.ABC):
    """Token-segment proposer. Log-probabilities are always <= 0, temperature
    zero is deterministic argmax, and banned first tokens never begin a
    returned segment (unless every alternative is banned, in which case the
    segment carries the degenerate flag)."""

    @abc.abstractmethod
    def generate_segment(
        self,
        context: str,
        width: int,
        max_tokens: int,
        temperature: float,
        banned_first_tokens: AbstractSet[str] = frozenset(),
    ) -> Segment:
        """Propose one continuation segment of up to ``max_tokens`` tokens,
        drawing the first token from up to ``width`` alternatives."""

    @abc.abstractmethod
    def complete(self, context: str, max_tokens: int, temperature: float) -> Segment:
        """Extend the context until end of sequence or ``max_tokens``."""


class StepVerifier(abc.ABC):
    @abc.abstractmethod
    def score_partial(self, question: str, partial_path: str) -> float:
        """Score a partial reasoning path, in [0, 1]."""


class PathVerifier(abc.ABC):
    @abc.abstractmethod
    def score_path(self, question: str, path: str) -> float:
        """Score a complete reasoning path, in [0, 1]."""


@dataclass
class ActorBundle:
    """A generator plus the two verifiers, moved around as one unit.

    ``text_ppl`` is an optional capability: the perplexity the generator
    assigns to a reasoning path, needed by the self-training filter to score
    ground-truth paths."""

    generator: Generator
    step_verifier: StepVerifier
    path_verifier: PathVerifier
    text_ppl: Callable[[str], float] | None = None


def clamp_score(value: float) -> float:
    """Clamp a verifier output into [0, 1]."""
    return min(1.0, max(0.0, value))


def build_context(question: str, path: str = "") -> str:
    """The generation context contract shared by all generators."""
    return f"{question}\n{path}"


def ban_penalty(
    alternatives: Sequence[tuple[str, float]],
    banned: AbstractSet[str],
) -> tuple[list[tuple[str, float]], bool]:
    """Penalize banned first tokens in a scored-alternative distribution.

    Banned alternatives get probability zero and the rest are renormalized.
    When every alternative is banned the original distribution is returned
    unchanged and the degenerate flag is set.

    Takes and returns (token, probability) pairs; the flag is True only in
    the degenerate case."""
    if not alternatives:
        raise ValueError("alternatives must be non-empty")
    kept = [(token, prob) for token, prob in alternatives if token not in banned]
    if not kept:
        return list(alternatives), True
    total = sum(prob for _, prob in kept)
    if total <= 0:
        return list(alternatives), True
    return [(token, prob / total) for token, prob in kept], False


# ---------------------------------------------------------------------------
# reproducible randomness for actor implementations

def stable_digest(*parts: object) -> int:
    """A process-independent 64-bit hash of the given parts."""
    hasher = hashlib.blake2b(digest_size=8)
    for part in parts:
        hasher.update(repr(part).encode("utf-8"))
        hasher.update(b"\x1f")
    return int.from_bytes(hasher.digest(), "big")


def stable_rng(*parts: object) -> random.Random:
    return random.Random(stable_digest(*parts))


@dataclass
class CallCounterRng:
    """Per-call randomness that replays identically in a fresh instance.

    Each distinct key tracks how often it was drawn; the n-th draw for a key
    is a PRNG seeded from (seed, key, n). Repeated calls with the same key
    therefore get independent draws, while two instances built with the same
    seed and fed the same per-key call sequence produce identical streams.
    Keys isolate concurrent call sites (e.g. different questions) from each
    other's interleaving."""

    seed: int
    _counts: dict[tuple, int] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def draw(self, *key: object) -> random.Random:
        with self._lock:
            count = self._counts.get(key, 0)
            self._counts[key] = count + 1
        return stable_rng(self.seed, key, count)
