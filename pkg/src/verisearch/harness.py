"""Evaluation harness: strategy comparison, guidance-weight ablation, and
budget scaling curves.

All randomness flows from one run-level seed, fanned out per question by a
stable hash of the question id, so runs reproduce regardless of worker
count or completion order.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .actors.base import ActorBundle, build_context, stable_digest
from .corpus import Sample, answers_equal, extract_answer
from .scoring import VoteTally, majority_vote, weighted_vote
from .search import ScoredPath, SearchConfig, search

logger = logging.getLogger(__name__)

STRATEGY_KINDS = ("greedy", "self_consistency", "core")


@dataclass(frozen=True)
class StrategySpec:
    """How answers are produced: a single greedy completion, unguided
    sampling with majority voting, or guided search with weighted voting."""

    kind: str
    num_paths: int = 40
    temperature: float = 0.7

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.num_paths < 1:
            raise ValueError("num_paths must be >= 1")


@dataclass(frozen=True)
class QuestionRecord:
    question_id: int
    predicted: str | None
    gold: str
    correct: bool
    paths_emitted: int
    flagged: bool = False


@dataclass(frozen=True)
class EvalReport:
    dataset_name: str
    strategy: StrategySpec
    accuracy: float
    records: tuple[QuestionRecord, ...]
    wall_time_s: float

    def to_rows(self) -> list[dict]:
        return [dataclasses.asdict(record) for record in self.records]


def _question_config(cfg: SearchConfig, question_id: int) -> SearchConfig:
    return replace(cfg, rng_seed=stable_digest(cfg.rng_seed, "question", question_id))


def _sample_paths(
    question: str,
    actors: ActorBundle,
    cfg: SearchConfig,
    count: int,
    temperature: float,
) -> list[ScoredPath]:
    """Independent unguided completions, shaped like scored paths so the
    voting helpers apply. Verifiers stay out of the loop: vote weights are
    irrelevant under majority voting."""
    paths = []
    for _ in range(count):
        segment = actors.generator.complete(
            build_context(question), max_tokens=cfg.path_max_tokens, temperature=temperature
        )
        answer = extract_answer(segment.text) if segment.ended else None
        paths.append(
            ScoredPath(
                path=segment.text,
                answer=answer,
                fused_score=0.0,
                step_score=0.0,
                path_score=0.0,
                ppl=1.0,
            )
        )
    return paths


def _evaluate_question(
    question_id: int,
    sample: Sample,
    actors: ActorBundle,
    strategy: StrategySpec,
    cfg: SearchConfig,
) -> QuestionRecord:
    gold = str(sample.ground_truth)
    question_cfg = _question_config(cfg, question_id)
    try:
        if strategy.kind == "greedy":
            segment = actors.generator.complete(
                build_context(sample.question), max_tokens=cfg.path_max_tokens, temperature=0.0
            )
            answer = extract_answer(segment.text) if segment.ended else None
            tally = VoteTally(weights={}, winner=answer)
            emitted = 1
        elif strategy.kind == "self_consistency":
            paths = _sample_paths(
                sample.question, actors, question_cfg, strategy.num_paths, strategy.temperature
            )
            tally = majority_vote(paths)
            emitted = len(paths)
        else:
            paths = search(
                sample.question,
                actors,
                replace(question_cfg, iterations=strategy.num_paths, time_budget=None),
            )
            tally = weighted_vote(paths)
            emitted = len(paths)
    except Exception:
        # an actor failure marks the question wrong but never kills the run
        logger.warning("actor failure on question %d", question_id, exc_info=True)
        return QuestionRecord(
            question_id=question_id,
            predicted=None,
            gold=gold,
            correct=False,
            paths_emitted=0,
            flagged=True,
        )
    predicted = tally.winner
    return QuestionRecord(
        question_id=question_id,
        predicted=str(predicted) if predicted is not None else None,
        gold=gold,
        correct=answers_equal(predicted, sample.ground_truth),
        paths_emitted=emitted,
    )


def run_eval(
    dataset: Sequence[Sample],
    actors: ActorBundle,
    strategy: StrategySpec,
    cfg: SearchConfig,
    dataset_name: str = "dataset",
    workers: int = 1,
) -> EvalReport:
    """Evaluate one strategy over a dataset, reporting exact accuracy."""
    if not dataset:
        raise ValueError("dataset is empty")
    started = time.perf_counter()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(
                pool.map(
                    lambda pair: _evaluate_question(pair[0], pair[1], actors, strategy, cfg),
                    enumerate(dataset),
                )
            )
    else:
        records = [
            _evaluate_question(index, sample, actors, strategy, cfg)
            for index, sample in enumerate(dataset)
        ]
    records.sort(key=lambda record: record.question_id)
    accuracy = sum(record.correct for record in records) / len(records)
    return EvalReport(
        dataset_name=dataset_name,
        strategy=strategy,
        accuracy=accuracy,
        records=tuple(records),
        wall_time_s=time.perf_counter() - started,
    )


def run_alpha_ablation(
    dataset: Sequence[Sample],
    actors: ActorBundle,
    cfg: SearchConfig,
    alphas: Sequence[float],
    dataset_name: str = "dataset",
    workers: int = 1,
) -> list[EvalReport]:
    """One guided evaluation per guidance weight, same seed throughout, plus
    an unguided self-consistency baseline row (reported first)."""
    if not alphas:
        raise ValueError("alphas is empty")
    budget = cfg.iterations if cfg.iterations is not None else 40
    reports = [
        run_eval(
            dataset,
            actors,
            StrategySpec(kind="self_consistency", num_paths=budget, temperature=cfg.temperature),
            cfg,
            dataset_name=dataset_name,
            workers=workers,
        )
    ]
    for alpha in alphas:
        reports.append(
            run_eval(
                dataset,
                actors,
                StrategySpec(kind="core", num_paths=budget, temperature=cfg.temperature),
                replace(cfg, alpha=alpha),
                dataset_name=dataset_name,
                workers=workers,
            )
        )
    return reports


def _tally_at_budget(paths: list[ScoredPath], budget: int, kind: str) -> VoteTally:
    prefix = paths[:budget]
    return weighted_vote(prefix) if kind == "core" else majority_vote(prefix)


def run_scaling_curve(
    dataset: Sequence[Sample],
    actors: ActorBundle,
    cfg: SearchConfig,
    budgets: Sequence[int],
    strategies: Sequence[str] = ("self_consistency", "core"),
    dataset_name: str = "dataset",
) -> list[dict]:
    """Accuracy per (budget, strategy) row.

    Guided search runs once per question at the largest budget; smaller
    budgets are read off as prefixes of the same iteration trace, which
    matches fresh runs exactly under a fixed seed. Sampled baselines reuse
    prefixes the same way."""
    if not dataset:
        raise ValueError("dataset is empty")
    if list(budgets) != sorted(budgets) or not budgets:
        raise ValueError("budgets must be non-empty and ascending")
    max_budget = budgets[-1]

    correct: dict[tuple[int, str], int] = {(b, s): 0 for b in budgets for s in strategies}
    for question_id, sample in enumerate(dataset):
        question_cfg = _question_config(cfg, question_id)
        per_strategy: dict[str, list[ScoredPath]] = {}
        if "core" in strategies:
            per_strategy["core"] = search(
                sample.question,
                actors,
                replace(question_cfg, iterations=max_budget, time_budget=None),
            )
        if "self_consistency" in strategies:
            per_strategy["self_consistency"] = _sample_paths(
                sample.question, actors, question_cfg, max_budget, cfg.temperature
            )
        for kind, paths in per_strategy.items():
            for budget in budgets:
                tally = _tally_at_budget(paths, budget, kind)
                if answers_equal(tally.winner, sample.ground_truth):
                    correct[(budget, kind)] += 1

    return [
        {
            "dataset": dataset_name,
            "budget": budget,
            "strategy": kind,
            "accuracy": correct[(budget, kind)] / len(dataset),
        }
        for budget in budgets
        for kind in strategies
    ]
