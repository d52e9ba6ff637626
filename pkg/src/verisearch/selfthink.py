"""The self-training data loop: generate solutions with guided search,
filter them by verifier score and perplexity against the ground-truth
solutions, and merge survivors into the dataset for the next training
round. Retraining itself is a checkpoint boundary handled by the model
side; each round emits a merged dataset file plus a manifest.
"""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .actors.base import ActorBundle, build_context
from .corpus import GeneratedSample, Sample, answers_equal, serialize_samples
from .search import SearchConfig, search

logger = logging.getLogger(__name__)

DEFAULT_PATHS_PER_QUESTION = 50


class UnknownQuestionError(KeyError):
    """A generated sample's question does not appear in the seed dataset."""


@dataclass(frozen=True)
class FilterPolicy:
    """What survives a round: fused score at or above the threshold, no
    higher perplexity than the ground-truth solution, and (by default) a
    correct final answer."""

    score_threshold: float = 0.5
    require_correct_answer: bool = True
    alpha: float = 1.0  # fused score weight for the step component

    def __post_init__(self) -> None:
        # thresholds above the score range are legal: they filter everything
        if self.score_threshold < 0.0:
            raise ValueError("score_threshold must be non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass(frozen=True)
class RoundManifest:
    round_index: int
    num_generated: int
    num_kept: int
    policy: FilterPolicy
    paths_per_question: int
    search_mode: str  # "iterations" or "time_budget"
    saturated: bool = False

    def to_json(self) -> str:
        payload = dataclasses.asdict(self)
        return json.dumps(payload, indent=2)


def _fused(sample: GeneratedSample, alpha: float) -> float:
    path_score = sample.path_score if sample.path_score is not None else 0.0
    step_score = sample.step_score if sample.step_score is not None else 0.0
    return path_score + alpha * step_score


def generate_round(
    seed: Sequence[Sample],
    actors: ActorBundle,
    cfg: SearchConfig,
    paths_per_question: int = DEFAULT_PATHS_PER_QUESTION,
) -> list[GeneratedSample]:
    """Run guided search on every seed question, collecting up to
    ``paths_per_question`` distinct paths each. A failing question is
    skipped with a warning rather than aborting the round."""
    if paths_per_question < 1:
        raise ValueError("paths_per_question must be >= 1")
    out: list[GeneratedSample] = []
    for sample in seed:
        try:
            paths = search(sample.question, actors, cfg)
        except Exception:
            logger.warning("skipping question after search failure: %r", sample.question, exc_info=True)
            continue
        seen: set[str] = set()
        for scored in paths:
            if scored.path in seen:
                continue
            seen.add(scored.path)
            out.append(
                GeneratedSample(
                    question=sample.question,
                    path=scored.path,
                    answer=scored.answer,
                    ppl=scored.ppl,
                    step_score=scored.step_score,
                    path_score=scored.path_score,
                )
            )
            if len(seen) >= paths_per_question:
                break
    return out


def ground_truth_ppls(seed: Sequence[Sample], actors: ActorBundle) -> dict[str, float]:
    """Perplexity of each seed question's reference path under the
    generator. Requires the bundle's text_ppl capability."""
    if actors.text_ppl is None:
        raise ValueError("actor bundle lacks text_ppl; cannot score ground-truth paths")
    return {
        sample.question: actors.text_ppl(build_context(sample.question, sample.path))
        for sample in seed
    }


def filter_round(
    generated: Sequence[GeneratedSample],
    seed: Sequence[Sample],
    policy: FilterPolicy,
    gt_ppl: Mapping[str, float],
) -> list[GeneratedSample]:
    """Keep samples passing all filter predicates. Every generated question
    must appear in the seed (and in gt_ppl) so its ground truth can be
    looked up."""
    truth = {sample.question: sample.ground_truth for sample in seed}
    kept: list[GeneratedSample] = []
    for sample in generated:
        if sample.question not in truth:
            raise UnknownQuestionError(f"question not in seed dataset: {sample.question!r}")
        if sample.question not in gt_ppl:
            raise UnknownQuestionError(f"question has no ground-truth ppl: {sample.question!r}")
        if _fused(sample, policy.alpha) < policy.score_threshold:
            continue
        if sample.ppl > gt_ppl[sample.question]:
            continue
        if policy.require_correct_answer and not answers_equal(sample.answer, truth[sample.question]):
            continue
        kept.append(sample)
    return kept


def merge_round(seed: Sequence[Sample], kept: Sequence[GeneratedSample]) -> list[Sample]:
    """Seed samples first, then kept paths grouped by question in seed
    order; exact-duplicate paths per question are dropped."""
    truth = {sample.question: sample.ground_truth for sample in seed}
    seen: set[tuple[str, str]] = {(sample.question, sample.path) for sample in seed}
    by_question: dict[str, list[GeneratedSample]] = {}
    for sample in kept:
        by_question.setdefault(sample.question, []).append(sample)

    merged = list(seed)
    for sample in seed:
        for generated in by_question.get(sample.question, []):
            key = (generated.question, generated.path)
            if key in seen:
                continue
            seen.add(key)
            merged.append(
                Sample(
                    question=generated.question,
                    path=generated.path,
                    ground_truth=truth[generated.question],
                )
            )
    return merged


def run_self_thinking(
    seed: Sequence[Sample],
    actors: ActorBundle,
    cfg: SearchConfig,
    policy: FilterPolicy,
    rounds: int,
    paths_per_question: int = DEFAULT_PATHS_PER_QUESTION,
    out_dir: str | Path = ".",
) -> list[RoundManifest]:
    """Run the generate/filter/merge loop, emitting one dataset file and one
    manifest per round. Stops early with a saturation notice when a round
    keeps nothing."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    search_mode = "iterations" if cfg.iterations is not None else "time_budget"

    def write_round(index: int, dataset: Sequence[Sample], manifest: RoundManifest) -> None:
        (out_path / f"selfthink_round_{index:03d}.jsonl").write_text(
            serialize_samples(dataset), encoding="utf-8"
        )
        (out_path / f"selfthink_manifest_{index:03d}.json").write_text(
            manifest.to_json() + "\n", encoding="utf-8"
        )

    manifests: list[RoundManifest] = []
    current: list[Sample] = list(seed)
    base_manifest = RoundManifest(
        round_index=0,
        num_generated=0,
        num_kept=0,
        policy=policy,
        paths_per_question=paths_per_question,
        search_mode=search_mode,
    )
    write_round(0, current, base_manifest)
    manifests.append(base_manifest)

    questions = {sample.question: sample for sample in seed}
    unique_seed = list(questions.values())
    gt_ppl = ground_truth_ppls(unique_seed, actors)

    for round_index in range(1, rounds + 1):
        generated = generate_round(unique_seed, actors, cfg, paths_per_question)
        kept = filter_round(generated, unique_seed, policy, gt_ppl)
        merged = merge_round(current, kept)
        num_kept = len(merged) - len(current)
        saturated = num_kept == 0
        manifest = RoundManifest(
            round_index=round_index,
            num_generated=len(generated),
            num_kept=num_kept,
            policy=policy,
            paths_per_question=paths_per_question,
            search_mode=search_mode,
            saturated=saturated,
        )
        write_round(round_index, merged, manifest)
        manifests.append(manifest)
        current = merged
        if saturated:
            logger.info("self-thinking saturated at round %d: nothing kept", round_index)
            break
    return manifests
