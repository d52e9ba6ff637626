"""Generator/verifier interfaces and their mock, toy, and remote backends."""
from .base import (
    ActorBundle,
    CallCounterRng,
    Generator,
    PathVerifier,
    Segment,
    StepVerifier,
    ban_penalty,
    build_context,
    clamp_score,
    stable_digest,
    stable_rng,
)
from .mock import (
    CallablePathVerifier,
    CallableStepVerifier,
    MockGenerator,
    MockScriptError,
    mock_actor_bundle,
    mock_generator,
)
from .remote import (
    RemoteError,
    RemoteSchemaError,
    RemoteStatusError,
    RemoteTimeoutError,
    RetryPolicy,
    remote_actor_bundle,
)
from .toy import (
    ToyDomainError,
    ToyDomainSpec,
    ToyGenerator,
    ToyPathVerifier,
    ToyStepVerifier,
    toy_actor_bundle,
    toy_generator,
    toy_oracle_verifiers,
    toy_problems,
)

__all__ = [
    "ActorBundle",
    "CallCounterRng",
    "Generator",
    "PathVerifier",
    "Segment",
    "StepVerifier",
    "ban_penalty",
    "build_context",
    "clamp_score",
    "stable_digest",
    "stable_rng",
    "CallablePathVerifier",
    "CallableStepVerifier",
    "MockGenerator",
    "MockScriptError",
    "mock_actor_bundle",
    "mock_generator",
    "RemoteError",
    "RemoteSchemaError",
    "RemoteStatusError",
    "RemoteTimeoutError",
    "RetryPolicy",
    "remote_actor_bundle",
    "ToyDomainError",
    "ToyDomainSpec",
    "ToyGenerator",
    "ToyPathVerifier",
    "ToyStepVerifier",
    "toy_actor_bundle",
    "toy_generator",
    "toy_oracle_verifiers",
    "toy_problems",
]
