"""Answer aggregation and training-objective arithmetic as pure functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

from .corpus import CanonicalAnswer

if TYPE_CHECKING:
    from .search import ScoredPath


@dataclass(frozen=True)
class VoteTally:
    """Accumulated vote weight per answer. The winner is the argmax bucket;
    ties go to the answer that appeared first among the input paths.
    Answerless paths contribute to no bucket."""

    weights: dict[CanonicalAnswer, float]
    winner: CanonicalAnswer | None


@dataclass(frozen=True)
class LossReport:
    lm_loss: float
    vs_loss: float
    vp_loss: float
    total: float


def _tally(paths: Sequence["ScoredPath"], weight_of: Callable[["ScoredPath"], float]) -> VoteTally:
    weights: dict[CanonicalAnswer, float] = {}
    for path in paths:
        if path.answer is None:
            continue
        weights[path.answer] = weights.get(path.answer, 0.0) + weight_of(path)
    winner: CanonicalAnswer | None = None
    best = -math.inf
    for answer, weight in weights.items():  # insertion order implements the tie-break
        if weight > best:
            winner, best = answer, weight
    return VoteTally(weights=weights, winner=winner)


def weighted_vote(paths: Sequence["ScoredPath"]) -> VoteTally:
    """Each answered path votes with its fused score, floored at zero."""
    return _tally(paths, lambda p: max(0.0, p.fused_score))


def majority_vote(paths: Sequence["ScoredPath"]) -> VoteTally:
    """Unweighted voting: every answered path counts once."""
    return _tally(paths, lambda p: 1.0)


def _check_logprobs(token_logprobs: Sequence[float]) -> None:
    if not token_logprobs:
        raise ValueError("token_logprobs is empty")
    for lp in token_logprobs:
        if lp > 0.0:
            raise ValueError(f"log-probability {lp} is above 0")


def lm_loss(token_logprobs: Sequence[float]) -> float:
    """Language-modeling loss: the negated sum of token log-probabilities."""
    _check_logprobs(token_logprobs)
    return -sum(token_logprobs)


def ppl(token_logprobs: Sequence[float]) -> float:
    """Perplexity: exp of the mean negative token log-likelihood. Always >= 1."""
    _check_logprobs(token_logprobs)
    return math.exp(lm_loss(token_logprobs) / len(token_logprobs))


def vs_loss(token_scores: Sequence[float], answer_correct: bool) -> float:
    """Step-verifier loss: sum of squared errors of per-token scores against
    the 0/1 answer-correctness label."""
    if not token_scores:
        raise ValueError("token_scores is empty")
    label = 1.0 if answer_correct else 0.0
    for score in token_scores:
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"token score {score} outside [0, 1]")
    return sum((score - label) ** 2 for score in token_scores)


def verifier_total_loss(vs: float, lm: float, vp: float) -> LossReport:
    """Combined verifier objective: the plain sum of the three parts."""
    for name, value in (("vs", vs), ("lm", lm), ("vp", vp)):
        if value < 0:
            raise ValueError(f"{name} loss is negative: {value}")
    return LossReport(lm_loss=lm, vs_loss=vs, vp_loss=vp, total=vs + lm + vp)
