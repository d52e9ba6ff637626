"""Actors backed by a remote inference service.

Wire protocol (JSON over HTTP POST, shared with the serving side):

    /generate    {context, width, max_tokens, temperature,
                  banned_first_tokens}
                 -> {alternatives: [{tokens, token_logprobs, ended?}],
                     reason?}
    /score_step  {question, partial_path} -> {score}
    /score_path  {question, path}         -> {score}
    /ppl         {text}                   -> {ppl}

Scores must lie in [0, 1] and log-probabilities must be <= 0; responses
violating the schema are fatal errors carrying the offending payload.
Timeouts and connection failures are retried per the policy and surface as
retriable errors once attempts are exhausted.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import AbstractSet

import httpx

from .base import ActorBundle, CallCounterRng, Generator, PathVerifier, Segment, StepVerifier

_LOGPROB_SLACK = 1e-9  # tolerate float dust just above zero


class RemoteError(RuntimeError):
    pass


class RemoteTimeoutError(RemoteError):
    """Transport failure that persisted through every retry attempt."""


class RemoteStatusError(RemoteError):
    def __init__(self, message: str, status_code: int):
        super().__init__(message)
        self.status_code = status_code


class RemoteSchemaError(RemoteError):
    def __init__(self, message: str, payload: object):
        super().__init__(f"{message}; payload: {payload!r}")
        self.payload = payload


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    backoff_s: float = 0.05


class _Transport:
    def __init__(self, endpoint: str, timeout_s: float, retry: RetryPolicy):
        self.endpoint = endpoint.rstrip("/")
        self.retry = retry
        self._client = httpx.Client(timeout=timeout_s)

    def post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.retry.attempts):
            if attempt:
                time.sleep(self.retry.backoff_s * attempt)
            try:
                response = self._client.post(f"{self.endpoint}{path}", json=payload)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = exc
                continue
            if response.status_code // 100 != 2:
                raise RemoteStatusError(
                    f"{path} returned status {response.status_code}: {response.text[:200]}",
                    status_code=response.status_code,
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise RemoteSchemaError(f"{path} response is not JSON", response.text) from exc
            if not isinstance(body, dict):
                raise RemoteSchemaError(f"{path} response is not an object", body)
            return body
        raise RemoteTimeoutError(
            f"{path} unreachable after {self.retry.attempts} attempts: {last_error}"
        )

    def close(self) -> None:
        self._client.close()


def _check_score(value: object, path: str, body: dict) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise RemoteSchemaError(f"{path} score is not a number", body)
    if not 0.0 <= float(value) <= 1.0:
        raise RemoteSchemaError(f"{path} score {value} outside [0, 1]", body)
    return float(value)


def _parse_alternative(raw: object, body: dict) -> tuple[tuple[str, ...], tuple[float, ...], bool]:
    if not isinstance(raw, dict):
        raise RemoteSchemaError("alternative is not an object", body)
    tokens = raw.get("tokens")
    logprobs = raw.get("token_logprobs")
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise RemoteSchemaError("alternative tokens are not a string list", body)
    if not isinstance(logprobs, list) or not all(
        isinstance(lp, (int, float)) and not isinstance(lp, bool) for lp in logprobs
    ):
        raise RemoteSchemaError("alternative token_logprobs are not numbers", body)
    if len(tokens) != len(logprobs):
        raise RemoteSchemaError(
            f"alternative token count {len(tokens)} != logprob count {len(logprobs)}", body
        )
    if any(lp > _LOGPROB_SLACK for lp in logprobs):
        raise RemoteSchemaError("alternative carries a log-probability above 0", body)
    clean = tuple(min(0.0, float(lp)) for lp in logprobs)
    return tuple(tokens), clean, bool(raw.get("ended", False))


class RemoteGenerator(Generator):
    def __init__(self, transport: _Transport, seed: int = 0):
        self._transport = transport
        self._rng = CallCounterRng(seed)

    def _generate(
        self,
        context: str,
        width: int,
        max_tokens: int,
        temperature: float,
        banned: AbstractSet[str],
    ) -> Segment:
        body = self._transport.post(
            "/generate",
            {
                "context": context,
                "width": width,
                "max_tokens": max_tokens,
                "temperature": temperature,
                "banned_first_tokens": sorted(banned),
            },
        )
        raw_alternatives = body.get("alternatives")
        if not isinstance(raw_alternatives, list) or not raw_alternatives:
            raise RemoteSchemaError("/generate returned no alternatives", body)
        if len(raw_alternatives) > width:
            raise RemoteSchemaError(
                f"/generate returned {len(raw_alternatives)} alternatives for width {width}", body
            )
        alternatives = [_parse_alternative(raw, body) for raw in raw_alternatives]
        for tokens, _, _ in alternatives:
            if tokens and tokens[0] in banned:
                raise RemoteSchemaError(f"/generate returned banned first token {tokens[0]!r}", body)
            if len(tokens) > max_tokens:
                raise RemoteSchemaError(
                    f"/generate alternative exceeds max_tokens {max_tokens}", body
                )
        if len(alternatives) == 1 or temperature <= 0.0:
            tokens, logprobs, ended = max(
                alternatives, key=lambda alt: sum(alt[1]) / max(1, len(alt[1]))
            )
        else:
            weights = [
                math.exp(sum(lp) / max(1, len(lp)) / temperature) for _, lp, _ in alternatives
            ]
            rng = self._rng.draw(context)
            tokens, logprobs, ended = rng.choices(alternatives, weights=weights, k=1)[0]
        return Segment(tokens=tokens, logprobs=logprobs, ended=ended)

    def generate_segment(
        self,
        context: str,
        width: int,
        max_tokens: int,
        temperature: float,
        banned_first_tokens: AbstractSet[str] = frozenset(),
    ) -> Segment:
        return self._generate(context, width, max_tokens, temperature, banned_first_tokens)

    def complete(self, context: str, max_tokens: int, temperature: float) -> Segment:
        # a completion is a width-1 generate request
        return self._generate(context, 1, max_tokens, temperature, frozenset())


class RemoteStepVerifier(StepVerifier):
    def __init__(self, transport: _Transport):
        self._transport = transport

    def score_partial(self, question: str, partial_path: str) -> float:
        body = self._transport.post(
            "/score_step", {"question": question, "partial_path": partial_path}
        )
        return _check_score(body.get("score"), "/score_step", body)


class RemotePathVerifier(PathVerifier):
    def __init__(self, transport: _Transport):
        self._transport = transport

    def score_path(self, question: str, path: str) -> float:
        body = self._transport.post("/score_path", {"question": question, "path": path})
        return _check_score(body.get("score"), "/score_path", body)


def remote_actor_bundle(
    endpoint: str,
    timeout_s: float = 10.0,
    retry: RetryPolicy = RetryPolicy(),
    seed: int = 0,
) -> ActorBundle:
    """Connect all three actor roles (plus text perplexity) to one service."""
    transport = _Transport(endpoint, timeout_s, retry)

    def text_ppl(text: str) -> float:
        body = transport.post("/ppl", {"text": text})
        value = body.get("ppl")
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            raise RemoteSchemaError("/ppl did not return a positive number", body)
        return float(value)

    return ActorBundle(
        generator=RemoteGenerator(transport, seed=seed),
        step_verifier=RemoteStepVerifier(transport),
        path_verifier=RemotePathVerifier(transport),
        text_ppl=text_ppl,
    )
