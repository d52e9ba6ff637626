"""Verifier-guided tree search for multi-step math word problems.

A fast generator proposes reasoning-step token segments; a step verifier
and a path verifier score partial and complete paths, steering a PUCT tree
search and weighting final-answer votes. The package also ships the
surrounding data pipeline (dataset ingestion, a score/perplexity
self-training filter) and an experiment harness comparing greedy decoding,
self-consistency sampling, and guided search.
"""
from . import actors, corpus, harness, scoring, search, selfthink

__version__ = "0.1.0"

__all__ = ["actors", "corpus", "harness", "scoring", "search", "selfthink", "__version__"]
