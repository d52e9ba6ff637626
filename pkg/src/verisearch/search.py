"""Cooperative inference: tree search over token segments with verifiers in
the loop.

One iteration performs selection, expansion, roll-out and backup:

* Selection walks down from the root. At a node with children a coin with
  ``select_prob`` decides between descending to the PUCT-best child and
  expanding right here, so descent depth is geometric.
* Expansion asks the generator for one segment (existing siblings' first
  tokens are banned), creates the child, and has the step verifier score
  the partial path.
* Roll-out completes the path from the new node, has the path verifier
  score it, and fuses the two scores into a single reward
  ``s = path_score + alpha * step_score``.
* Backup adds ``s`` to every node on the root-to-current chain and bumps
  their visit counts.

A node whose segment contains the generator's end of sequence is terminal;
selecting into it re-emits its stored complete path (re-scored by the path
verifier, reusing the stored step score) so that every iteration yields a
scored path.
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .actors.base import ActorBundle, Segment, ban_penalty, build_context, clamp_score
from .corpus import CanonicalAnswer, extract_answer

__all__ = [
    "SearchConfig",
    "SearchNode",
    "SearchTree",
    "ScoredPath",
    "TraceRecord",
    "CooperativeSearch",
    "SearchError",
    "TimeBudgetError",
    "select_child",
    "ban_penalty",
    "search",
]


class SearchError(RuntimeError):
    pass


class TimeBudgetError(SearchError):
    """The time budget expired before a single iteration completed."""


@dataclass(frozen=True)
class SearchConfig:
    c_puct: float = 1.25
    alpha: float = 1.0
    iterations: int | None = 40
    time_budget: float | None = None
    expansion_width: int = 20
    rollout_max_tokens: int = 300
    path_max_tokens: int = 400
    select_prob: float = 0.5
    temperature: float = 0.7
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.c_puct < 0:
            raise ValueError("c_puct must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.iterations is None and self.time_budget is None:
            raise ValueError("either iterations or time_budget must be set")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")
        if self.expansion_width < 1:
            raise ValueError("expansion_width must be positive")
        if self.rollout_max_tokens < 1 or self.path_max_tokens < 1:
            raise ValueError("token limits must be positive")
        if self.rollout_max_tokens > self.path_max_tokens:
            raise ValueError("rollout_max_tokens must not exceed path_max_tokens")
        if not 0.0 <= self.select_prob <= 1.0:
            raise ValueError("select_prob must lie in [0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")


@dataclass
class SearchNode:
    """One tree node holding a generated token segment.

    ``prior`` is the geometric mean of the segment's token probabilities
    (None at the root); it is renormalized over siblings at selection time.
    ``reward_sum`` accumulates backed-up fused scores, one per visit."""

    segment: tuple[str, ...]
    logprobs: tuple[float, ...]
    prior: float | None
    step_score: float | None = None
    reward_sum: float = 0.0
    visits: int = 0
    children: list["SearchNode"] = field(default_factory=list)
    terminal: bool = False
    answerless: bool = False


@dataclass
class SearchTree:
    question: str
    root: SearchNode


@dataclass(frozen=True)
class ScoredPath:
    """A complete reasoning path produced by one search iteration."""

    path: str
    answer: CanonicalAnswer | None
    fused_score: float
    step_score: float
    path_score: float
    ppl: float


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    depth: int
    step_score: float
    path_score: float
    fused: float
    answer: str | None


def select_child(node: SearchNode, cfg: SearchConfig) -> SearchNode:
    """Pick the child maximizing Q(n) + c_puct * pi(n|s) * sqrt(N)/(1+N(n)),
    with Q the mean backed-up reward (0 when unvisited) and pi the sibling-
    renormalized prior. Ties break toward the lowest child index."""
    if not node.children:
        raise SearchError("cannot select a child of a childless node")
    children = node.children
    sqrt_total = math.sqrt(sum(child.visits for child in children))
    raw_priors = [child.prior if child.prior is not None else 0.0 for child in children]
    prior_mass = sum(raw_priors)
    best: SearchNode | None = None
    best_score = -math.inf
    for child, raw in zip(children, raw_priors):
        prior = raw / prior_mass if prior_mass > 0 else 1.0 / len(children)
        q = child.reward_sum / child.visits if child.visits else 0.0
        score = q + cfg.c_puct * prior * sqrt_total / (1 + child.visits)
        if score > best_score:
            best, best_score = child, score
    assert best is not None
    return best


def _geometric_mean_prob(logprobs: tuple[float, ...]) -> float:
    if not logprobs:
        return 1.0
    return math.exp(sum(logprobs) / len(logprobs))


class CooperativeSearch:
    """A single-question search engine owning one tree."""

    def __init__(self, question: str, actors: ActorBundle, cfg: SearchConfig):
        self.cfg = cfg
        self.actors = actors
        self.tree = SearchTree(question=question, root=SearchNode((), (), prior=None))
        self.iterations_run = 0
        self.last_chain: list[SearchNode] = []
        self._rng = random.Random(cfg.rng_seed)

    @staticmethod
    def _path_text(chain: list[SearchNode]) -> str:
        return "".join(token for node in chain for token in node.segment)

    @staticmethod
    def _tokens_used(chain: list[SearchNode]) -> int:
        return sum(len(node.segment) for node in chain)

    def step(self) -> ScoredPath:
        """Run one full iteration and return the path it produced."""
        cfg = self.cfg
        question = self.tree.question
        node = self.tree.root
        chain = [node]
        expanded: SearchNode | None = None

        while True:
            if node.terminal:
                break
            if node.children and self._rng.random() < cfg.select_prob:
                node = select_child(node, cfg)
                chain.append(node)
                continue
            remaining = cfg.path_max_tokens - self._tokens_used(chain)
            if remaining <= 0:
                # path budget exhausted below this node: freeze it
                node.terminal = True
                node.answerless = True
                break
            banned = frozenset(
                child.segment[0] for child in node.children if child.segment
            )
            segment = self.actors.generator.generate_segment(
                build_context(question, self._path_text(chain)),
                width=cfg.expansion_width,
                max_tokens=min(cfg.expansion_width, remaining),
                temperature=cfg.temperature,
                banned_first_tokens=banned,
            )
            child = SearchNode(
                segment=tuple(segment.tokens),
                logprobs=tuple(segment.logprobs),
                prior=_geometric_mean_prob(tuple(segment.logprobs)),
                terminal=segment.ended,
            )
            node.children.append(child)
            chain.append(child)
            child.step_score = clamp_score(
                self.actors.step_verifier.score_partial(question, self._path_text(chain))
            )
            node = child
            expanded = child
            break

        prefix_text = self._path_text(chain)
        if expanded is None:
            # terminal re-emission: the stored path, re-scored by the path
            # verifier only, reusing the stored step score
            rollout = Segment((), (), ended=not node.answerless)
        elif node.terminal:
            rollout = Segment((), (), ended=True)
        else:
            remaining = cfg.path_max_tokens - self._tokens_used(chain)
            if remaining <= 0:
                rollout = Segment((), (), ended=False)
            else:
                rollout = self.actors.generator.complete(
                    build_context(question, prefix_text),
                    max_tokens=min(cfg.rollout_max_tokens, remaining),
                    temperature=cfg.temperature,
                )

        full_text = prefix_text + rollout.text
        answer = extract_answer(full_text) if rollout.ended else None
        step_score = node.step_score if node.step_score is not None else 0.0
        path_score = clamp_score(self.actors.path_verifier.score_path(question, full_text))
        fused = path_score + cfg.alpha * step_score

        for touched in chain:
            touched.reward_sum += fused
            touched.visits += 1

        logprobs = [lp for n in chain for lp in n.logprobs] + list(rollout.logprobs)
        ppl = math.exp(-sum(logprobs) / len(logprobs)) if logprobs else math.inf

        self.last_chain = chain
        self.iterations_run += 1
        return ScoredPath(
            path=full_text,
            answer=answer,
            fused_score=fused,
            step_score=step_score,
            path_score=path_score,
            ppl=ppl,
        )

    def run(self, on_iteration: Callable[[TraceRecord], None] | None = None) -> list[ScoredPath]:
        """Iterate until the configured budget is exhausted.

        The iteration count governs when set; otherwise iterations run until
        the wall-clock budget expires, and finishing none at all is an error."""
        cfg = self.cfg
        paths: list[ScoredPath] = []

        def emit(scored: ScoredPath) -> None:
            paths.append(scored)
            if on_iteration is not None:
                on_iteration(
                    TraceRecord(
                        iteration=len(paths) - 1,
                        depth=len(self.last_chain) - 1,
                        step_score=scored.step_score,
                        path_score=scored.path_score,
                        fused=scored.fused_score,
                        answer=str(scored.answer) if scored.answer is not None else None,
                    )
                )

        if cfg.iterations is not None:
            for _ in range(cfg.iterations):
                emit(self.step())
            return paths

        deadline = time.monotonic() + float(cfg.time_budget or 0.0)
        while time.monotonic() < deadline:
            emit(self.step())
        if not paths:
            raise TimeBudgetError(
                f"time budget {cfg.time_budget}s expired before one iteration finished"
            )
        return paths


def search(
    question: str,
    actors: ActorBundle,
    cfg: SearchConfig,
    on_iteration: Callable[[TraceRecord], None] | None = None,
) -> list[ScoredPath]:
    """Run a full cooperative search, returning one ScoredPath per iteration
    in production order."""
    return CooperativeSearch(question, actors, cfg).run(on_iteration=on_iteration)
