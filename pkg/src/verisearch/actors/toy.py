"""A synthetic arithmetic-chain domain with controllable error rates.

Problems are chains of additions/subtractions over a start value. Each
problem has exactly one correct derivation, rendered result-first so that
sibling steps always differ in their first token:

    question:  "Start with 12. Then add 5. Then subtract 3. What is the
                final value?"
    path:      "17 = 12 + 5. 14 = 17 - 3. [ANS] 14."

Tokens are whitespace-delimited words carrying their trailing space; one
reasoning step is one sentence. The generator emits the correct next step
with probability 1 - error_rate, otherwise a corrupted step (operand off by
one, or the operator swapped); the final "[ANS]" line always transcribes
the last written value. Corrupted chains keep computing consistently from
their wrong intermediate value, the way a language model stays locally
coherent after a slip.

The error mixture is the model's sampling distribution at any temperature
above zero; temperature zero decodes the most likely (correct) step. All
randomness is replayable: a fresh actor built from the same spec produces
the same call-by-call stream.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import AbstractSet, Sequence

from ..corpus import CanonicalAnswer, Sample, answers_equal, extract_answer, normalize_answer
from .base import (
    ActorBundle,
    CallCounterRng,
    Generator,
    PathVerifier,
    Segment,
    StepVerifier,
    ban_penalty,
    clamp_score,
    stable_rng,
)


class ToyDomainError(ValueError):
    """The context was not generated from this toy domain."""


@dataclass(frozen=True)
class ToyDomainSpec:
    num_steps: int = 3
    operand_range: tuple[int, int] = (2, 9)
    error_rate: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_steps < 1:
            raise ValueError("num_steps must be >= 1")
        lo, hi = self.operand_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad operand range {self.operand_range}")
        if not 0.0 <= self.error_rate < 1.0:
            raise ValueError("error_rate must lie in [0, 1)")


# Relative weights of the corruption variants: operand+1, operand-1,
# swapped operator. The off-by-one bias concentrates wrong answers onto a
# few values, which is what makes unguided majority voting fallible here.
_VARIANT_WEIGHTS = (0.6, 0.2, 0.2)
_ADD_PROBABILITY = 0.85
_SWAP = {"+": "-", "-": "+"}

_QUESTION_RE = re.compile(
    r"Start with (-?\d+)\.((?: Then (?:add|subtract) \d+\.)+) What is the final value\?"
)
_CLAUSE_RE = re.compile(r" Then (add|subtract) (\d+)\.")
_TOKEN_RE = re.compile(r"\S+\s*")
_RESULT_TOKEN_RE = re.compile(r"(-?\d+)\s+")
_OPERAND_TOKEN_RE = re.compile(r"(-?\d+)\.\s*")
_ANSWER_HEAD_RE = re.compile(r"\[ANS\]\s+")
_ANSWER_TAIL_RE = re.compile(r"(-?\d+)\.\s*")


def _apply(op: str, x: int, b: int) -> int:
    return x + b if op == "+" else x - b


@lru_cache(maxsize=4096)
def _parse_question(question: str) -> tuple[int, tuple[str, ...], tuple[int, ...]]:
    match = _QUESTION_RE.fullmatch(question.strip())
    if not match:
        raise ToyDomainError(f"not a toy question: {question!r}")
    start = int(match.group(1))
    ops: list[str] = []
    operands: list[int] = []
    for word, operand in _CLAUSE_RE.findall(match.group(2)):
        ops.append("+" if word == "add" else "-")
        operands.append(int(operand))
    return start, tuple(ops), tuple(operands)


def _step_tokens(x: int, op: str, b: int) -> tuple[str, ...]:
    return (f"{_apply(op, x, b)} ", "= ", f"{x} ", f"{op} ", f"{b}. ")


def _answer_tokens(value: int) -> tuple[str, ...]:
    return ("[ANS] ", f"{value}.")


@lru_cache(maxsize=4096)
def _correct_path(question: str) -> str:
    start, ops, operands = _parse_question(question)
    parts: list[str] = []
    value = start
    for op, b in zip(ops, operands):
        parts.extend(_step_tokens(value, op, b))
        value = _apply(op, value, b)
    parts.extend(_answer_tokens(value))
    return "".join(parts)


def _final_value(question: str) -> int:
    start, ops, operands = _parse_question(question)
    value = start
    for op, b in zip(ops, operands):
        value = _apply(op, value, b)
    return value


@dataclass(frozen=True)
class _PathState:
    steps_written: int
    value: int           # last written result (start value when no steps yet)
    fragment: tuple[str, ...]
    answered: bool


def _parse_path(question: str, path: str) -> _PathState:
    start, ops, _ = _parse_question(question)
    tokens = _TOKEN_RE.findall(path)
    pos = 0
    steps = 0
    value = start
    while True:
        remaining = tokens[pos:]
        if not remaining:
            return _PathState(steps, value, (), False)
        if _ANSWER_HEAD_RE.fullmatch(remaining[0]):
            if len(remaining) == 1:
                return _PathState(steps, value, tuple(remaining), False)
            if len(remaining) == 2 and _ANSWER_TAIL_RE.fullmatch(remaining[1]):
                return _PathState(steps, value, (), True)
            raise ToyDomainError(f"malformed answer line in path: {path!r}")
        if steps >= len(ops):
            raise ToyDomainError(f"path has more steps than the question asks: {path!r}")
        if len(remaining) < 5:
            return _PathState(steps, value, tuple(remaining), False)
        group = remaining[:5]
        result_match = _RESULT_TOKEN_RE.fullmatch(group[0])
        operand_match = _OPERAND_TOKEN_RE.fullmatch(group[4])
        if not (
            result_match
            and group[1].rstrip() == "="
            and _RESULT_TOKEN_RE.fullmatch(group[2])
            and group[3].rstrip() in ("+", "-")
            and operand_match
        ):
            return _PathState(steps, value, tuple(remaining), False)
        value = int(result_match.group(1))
        steps += 1
        pos += 5


class ToyGenerator(Generator):
    def __init__(self, spec: ToyDomainSpec):
        self.spec = spec
        self._rng = CallCounterRng(stable_rng(spec.seed, "generator").getrandbits(63))

    # -- candidate machinery ------------------------------------------------

    def _candidates(self, question: str, state: _PathState) -> list[tuple[tuple[str, ...], float]]:
        """The distribution over next whole steps given the written chain."""
        _, ops, operands = _parse_question(question)
        k, x = state.steps_written, state.value
        if k >= len(ops):
            return [(_answer_tokens(x), 1.0)]
        op, b = ops[k], operands[k]
        eps = self.spec.error_rate
        out = [(_step_tokens(x, op, b), 1.0 - eps)]
        if eps > 0.0:
            total = sum(_VARIANT_WEIGHTS)
            variants = ((op, b + 1), (op, b - 1), (_SWAP[op], b))
            for (vop, vb), weight in zip(variants, _VARIANT_WEIGHTS):
                out.append((_step_tokens(x, vop, vb), eps * weight / total))
        return out

    def _match_fragment(
        self,
        candidates: list[tuple[tuple[str, ...], float]],
        fragment: tuple[str, ...],
    ) -> list[tuple[tuple[str, ...], float]]:
        matched = [
            (tokens[len(fragment):], prob)
            for tokens, prob in candidates
            if tokens[: len(fragment)] == fragment
        ]
        if not matched:
            raise ToyDomainError(f"dangling fragment {fragment!r} matches no toy step")
        total = sum(p for _, p in matched)
        return [(tokens, prob / total) for tokens, prob in matched]

    def _choose(
        self,
        candidates: list[tuple[tuple[str, ...], float]],
        temperature: float,
        rng_key: str,
    ) -> tuple[tuple[str, ...], float]:
        if temperature <= 0.0 or len(candidates) == 1:
            return max(candidates, key=lambda c: c[1])
        rng = self._rng.draw(rng_key)
        return rng.choices(candidates, weights=[p for _, p in candidates], k=1)[0]

    @staticmethod
    def _split_context(context: str) -> tuple[str, str]:
        question, sep, path = context.partition("\n")
        if not sep:
            raise ToyDomainError("context lacks the question/path separator")
        return question, path

    # -- Generator interface ------------------------------------------------

    def generate_segment(
        self,
        context: str,
        width: int,
        max_tokens: int,
        temperature: float,
        banned_first_tokens: AbstractSet[str] = frozenset(),
    ) -> Segment:
        question, path = self._split_context(context)
        state = _parse_path(question, path)
        if state.answered:
            return Segment((), (), ended=True)
        candidates = self._candidates(question, state)
        if state.fragment:
            candidates = self._match_fragment(candidates, state.fragment)
        degenerate = False
        if banned_first_tokens:
            penalized, degenerate = ban_penalty(
                [(tokens[0], prob) for tokens, prob in candidates], banned_first_tokens
            )
            if not degenerate:
                reweighted = dict(penalized)
                candidates = [
                    (tokens, reweighted[tokens[0]])
                    for tokens, _ in candidates
                    if tokens[0] in reweighted
                ]
        tokens, prob = self._choose(candidates, temperature, context)
        emitted = tokens[:max_tokens]
        is_answer = tokens and tokens[0].startswith("[ANS]")
        ended = bool(is_answer) and len(emitted) == len(tokens)
        logprobs = (math.log(prob) if prob > 0 else -math.inf,) + (0.0,) * (len(emitted) - 1)
        return Segment(tuple(emitted), logprobs[: len(emitted)], ended=ended, degenerate=degenerate)

    def complete(self, context: str, max_tokens: int, temperature: float) -> Segment:
        question, path = self._split_context(context)
        state = _parse_path(question, path)
        tokens: list[str] = []
        logprobs: list[float] = []
        budget = max_tokens
        ended = state.answered
        while not ended and budget > 0:
            candidates = self._candidates(question, state)
            if state.fragment:
                candidates = self._match_fragment(candidates, state.fragment)
            chosen, prob = self._choose(candidates, temperature, context)
            emitted = chosen[:budget]
            tokens.extend(emitted)
            logprobs.append(math.log(prob) if prob > 0 else -math.inf)
            logprobs.extend(0.0 for _ in emitted[1:])
            budget -= len(emitted)
            if len(emitted) < len(chosen):
                break  # truncated mid-step, no end of sequence
            path = path + "".join(emitted)
            state = _parse_path(question, path)
            ended = state.answered
        return Segment(tuple(tokens), tuple(logprobs), ended=ended)

    # -- perplexity scoring ---------------------------------------------------

    def text_ppl(self, context: str) -> float:
        """Perplexity of a written path under this model's step mixture.

        Takes the full generation context (question, newline, path)."""
        question, path = self._split_context(context)
        start, ops, _ = _parse_question(question)
        tokens = _TOKEN_RE.findall(path)
        if not tokens:
            raise ToyDomainError("cannot score an empty path")
        total_logprob = 0.0
        state = _PathState(0, start, (), False)
        consumed = ""
        while not state.answered:
            candidates = self._candidates(question, state)
            here = _TOKEN_RE.findall(path[len(consumed):])
            if not here:
                break
            matched = [(t, p) for t, p in candidates if tuple(here[: len(t)]) == t]
            if not matched:
                raise ToyDomainError(f"path does not parse under the toy model: {path!r}")
            chosen, prob = matched[0]
            total_logprob += math.log(prob) if prob > 0 else -math.inf
            consumed += "".join(chosen)
            state = _parse_path(question, consumed)
        return math.exp(-total_logprob / len(tokens))


class ToyStepVerifier(StepVerifier):
    """Oracle over partial paths: 1 when the partial path is a prefix of the
    correct derivation (commuted '+' operands allowed), else 0, with the
    verdict flipped at the configured noise rate per call."""

    def __init__(self, spec: ToyDomainSpec, noise: float = 0.0):
        if not 0.0 <= noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        self.spec = spec
        self.noise = noise
        self._noise_rng = CallCounterRng(stable_rng(spec.seed, "step-noise").getrandbits(63))

    def _prefix_ok(self, question: str, partial: str) -> bool:
        correct = _correct_path(question)
        if correct.startswith(partial):
            return True
        # commutative fallback: re-derive step by step, allowing "b + x"
        start, ops, operands = _parse_question(question)
        tokens = _TOKEN_RE.findall(partial)
        value = start
        pos = 0
        for k, (op, b) in enumerate(zip(ops, operands)):
            if pos >= len(tokens):
                return True
            renderings = [_step_tokens(value, op, b)]
            if op == "+":
                result = _apply(op, value, b)
                renderings.append((f"{result} ", "= ", f"{b} ", "+ ", f"{value}. "))
            group = tuple(tokens[pos:pos + 5])
            if len(group) < 5:
                return any(r[: len(group)] == group for r in renderings)
            if not any(tuple(r) == group for r in renderings):
                return False
            value = _apply(op, value, b)
            pos += 5
        tail = tuple(tokens[pos:])
        answer = _answer_tokens(value)
        return tail == answer[: len(tail)]

    def score_partial(self, question: str, partial_path: str) -> float:
        try:
            verdict = 1.0 if self._prefix_ok(question, partial_path) else 0.0
        except ToyDomainError:
            verdict = 0.0
        if self.noise > 0.0:
            rng = self._noise_rng.draw(question, partial_path)
            if rng.random() < self.noise:
                verdict = 1.0 - verdict
        return clamp_score(verdict)


class ToyPathVerifier(PathVerifier):
    """Oracle over complete paths: checks the extracted final answer."""

    def __init__(self, spec: ToyDomainSpec, noise: float = 0.0):
        if not 0.0 <= noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        self.spec = spec
        self.noise = noise
        self._noise_rng = CallCounterRng(stable_rng(spec.seed, "path-noise").getrandbits(63))

    def score_path(self, question: str, path: str) -> float:
        try:
            expected = normalize_answer(_final_value(question))
        except ToyDomainError:
            return 0.0
        verdict = 1.0 if answers_equal(extract_answer(path), expected) else 0.0
        if self.noise > 0.0:
            rng = self._noise_rng.draw(question, path)
            if rng.random() < self.noise:
                verdict = 1.0 - verdict
        return clamp_score(verdict)


def toy_problems(spec: ToyDomainSpec, count: int) -> list[Sample]:
    """Deterministically synthesize toy problems as seed samples."""
    samples = []
    for index in range(count):
        rng = stable_rng(spec.seed, "problem", index)
        start = rng.randint(10, 50)
        clauses = []
        for _ in range(spec.num_steps):
            op = "+" if rng.random() < _ADD_PROBABILITY else "-"
            b = rng.randint(*spec.operand_range)
            clauses.append(f" Then {'add' if op == '+' else 'subtract'} {b}.")
        question = f"Start with {start}.{''.join(clauses)} What is the final value?"
        samples.append(
            Sample(
                question=question,
                path=_correct_path(question),
                ground_truth=CanonicalAnswer(normalize_answer(_final_value(question)).value),
            )
        )
    return samples


def toy_generator(spec: ToyDomainSpec) -> ToyGenerator:
    return ToyGenerator(spec)


def toy_oracle_verifiers(
    spec: ToyDomainSpec, noise: float = 0.0
) -> tuple[ToyStepVerifier, ToyPathVerifier]:
    return ToyStepVerifier(spec, noise), ToyPathVerifier(spec, noise)


def toy_actor_bundle(spec: ToyDomainSpec, noise: float = 0.0) -> ActorBundle:
    generator = toy_generator(spec)
    step, path = toy_oracle_verifiers(spec, noise)
    return ActorBundle(
        generator=generator,
        step_verifier=step,
        path_verifier=path,
        text_ppl=generator.text_ppl,
    )
