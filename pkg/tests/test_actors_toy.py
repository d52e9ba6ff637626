import math

import pytest

from verisearch.actors.base import build_context
from verisearch.actors.toy import (
    ToyDomainError,
    ToyDomainSpec,
    toy_actor_bundle,
    toy_generator,
    toy_oracle_verifiers,
    toy_problems,
)
from verisearch.corpus import extract_answer


NOISELESS = ToyDomainSpec(num_steps=3, error_rate=0.0, seed=5)
NOISY = ToyDomainSpec(num_steps=3, error_rate=0.3, seed=5)


class TestToyProblems:
    def test_deterministic(self):
        assert toy_problems(NOISY, 5) == toy_problems(NOISY, 5)

    def test_unique_correct_derivation_answers(self):
        for sample in toy_problems(NOISY, 20):
            assert extract_answer(sample.path) is not None
            assert str(extract_answer(sample.path)) == str(sample.ground_truth)

    def test_question_shape(self):
        sample = toy_problems(ToyDomainSpec(num_steps=2, seed=1), 1)[0]
        assert sample.question.startswith("Start with ")
        assert sample.question.endswith("What is the final value?")


class TestToyGenerator:
    def test_error_free_completion_is_the_correct_derivation(self):
        problems = toy_problems(NOISELESS, 10)
        gen = toy_generator(NOISELESS)
        for sample in problems:
            segment = gen.complete(build_context(sample.question), 400, temperature=0.7)
            assert segment.ended
            assert segment.text == sample.path

    def test_temperature_zero_is_deterministic_and_correct(self):
        sample = toy_problems(NOISY, 1)[0]
        gen = toy_generator(NOISY)
        runs = {gen.complete(build_context(sample.question), 400, 0.0).text for _ in range(10)}
        assert runs == {sample.path}

    def test_fully_correct_fraction_matches_error_rate(self):
        # the chance of an all-correct completion is (1 - error_rate)^steps
        sample = toy_problems(NOISY, 1)[0]
        gen = toy_generator(NOISY)
        context = build_context(sample.question)
        hits = sum(
            gen.complete(context, 400, temperature=0.7).text == sample.path
            for _ in range(10_000)
        )
        assert hits / 10_000 == pytest.approx((1 - 0.3) ** 3, abs=0.02)

    def test_fresh_instances_replay_identically(self):
        sample = toy_problems(NOISY, 1)[0]
        context = build_context(sample.question)
        a = [toy_generator(NOISY).complete(context, 400, 0.7).text for _ in range(1)]
        gen1, gen2 = toy_generator(NOISY), toy_generator(NOISY)
        seq1 = [gen1.complete(context, 400, 0.7).text for _ in range(30)]
        seq2 = [gen2.complete(context, 400, 0.7).text for _ in range(30)]
        assert seq1 == seq2
        assert a[0] == seq1[0]

    def test_segment_is_one_step(self):
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        segment = gen.generate_segment(
            build_context(sample.question), width=20, max_tokens=20, temperature=0.7
        )
        assert len(segment.tokens) == 5
        assert segment.text.endswith(". ")
        assert not segment.ended

    def test_banned_first_tokens_respected(self):
        sample = toy_problems(NOISY, 1)[0]
        gen = toy_generator(NOISY)
        context = build_context(sample.question)
        free = gen.generate_segment(context, 20, 20, 0.0)
        banned = {free.tokens[0]}
        for _ in range(1000):
            segment = gen.generate_segment(
                context, 20, 20, temperature=0.7, banned_first_tokens=banned
            )
            assert segment.tokens[0] not in banned
            assert not segment.degenerate

    def test_all_banned_sets_degenerate_flag(self):
        # the answer line is the only candidate once all steps are written
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        path = sample.path[: sample.path.index("[ANS]")]
        segment = gen.generate_segment(
            build_context(sample.question, path),
            width=20,
            max_tokens=20,
            temperature=0.7,
            banned_first_tokens={"[ANS] "},
        )
        assert segment.degenerate
        assert segment.tokens[0] == "[ANS] "

    def test_truncated_segment_resumes_via_fragment(self):
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        context = build_context(sample.question)
        head = gen.generate_segment(context, 20, max_tokens=2, temperature=0.0)
        assert len(head.tokens) == 2 and not head.ended
        tail = gen.complete(context + head.text, 400, temperature=0.0)
        assert tail.ended
        assert head.text + tail.text == sample.path

    def test_token_budget_cuts_without_eos(self):
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        segment = gen.complete(build_context(sample.question), max_tokens=4, temperature=0.0)
        assert len(segment.tokens) == 4
        assert not segment.ended

    def test_foreign_context_rejected(self):
        gen = toy_generator(NOISY)
        with pytest.raises(ToyDomainError):
            gen.complete(build_context("What is 2+2?"), 400, 0.7)

    def test_logprobs_reflect_distribution(self):
        sample = toy_problems(NOISY, 1)[0]
        gen = toy_generator(NOISY)
        segment = gen.generate_segment(build_context(sample.question), 20, 20, 0.0)
        assert segment.logprobs[0] == pytest.approx(math.log(0.7))
        assert all(lp == 0.0 for lp in segment.logprobs[1:])


class TestToyPpl:
    def test_correct_path_has_the_lowest_ppl(self):
        sample = toy_problems(NOISY, 1)[0]
        gen = toy_generator(NOISY)
        gt_ppl = gen.text_ppl(build_context(sample.question, sample.path))
        assert gt_ppl > 1.0
        for _ in range(50):
            segment = gen.complete(build_context(sample.question), 400, 0.7)
            ppl = gen.text_ppl(build_context(sample.question, segment.text))
            assert ppl >= gt_ppl - 1e-12

    def test_error_free_model_gives_ppl_one(self):
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        assert gen.text_ppl(build_context(sample.question, sample.path)) == pytest.approx(1.0)


class TestToyOracles:
    def test_correct_prefix_scores_one(self):
        sample = toy_problems(NOISELESS, 1)[0]
        step, path = toy_oracle_verifiers(NOISELESS, noise=0.0)
        text = sample.path
        for cut in range(0, len(text), 7):
            assert step.score_partial(sample.question, text[:cut]) == 1.0
        assert path.score_path(sample.question, text) == 1.0

    def test_wrong_answer_scores_zero(self):
        sample = toy_problems(NOISELESS, 1)[0]
        _, path = toy_oracle_verifiers(NOISELESS, noise=0.0)
        wrong = sample.path.replace(f"[ANS] {sample.ground_truth}.", "[ANS] 999999.")
        assert path.score_path(sample.question, wrong) == 0.0

    def test_corrupted_prefix_scores_zero(self):
        sample = toy_problems(NOISELESS, 1)[0]
        step, _ = toy_oracle_verifiers(NOISELESS, noise=0.0)
        assert step.score_partial(sample.question, "99999 = 1 + 1. ") == 0.0

    def test_commuted_addition_operands_accepted(self):
        spec = ToyDomainSpec(num_steps=1, seed=9)
        sample = toy_problems(spec, 1)[0]
        step, _ = toy_oracle_verifiers(spec, noise=0.0)
        # rewrite "r = x + b." as "r = b + x."
        result, _, x, op, b_dot = sample.path.split(" ", 4)
        if op == "+":
            b = b_dot.split(".", 1)[0]
            commuted = f"{result} = {b} + {x}. "
            assert step.score_partial(sample.question, commuted) == 1.0

    def test_noise_half_means_half_score(self):
        sample = toy_problems(NOISY, 1)[0]
        step, _ = toy_oracle_verifiers(NOISY, noise=0.5)
        scores = [step.score_partial(sample.question, sample.path) for _ in range(10_000)]
        assert sum(scores) / len(scores) == pytest.approx(0.5, abs=0.02)
        wrong_scores = [step.score_partial(sample.question, "bogus") for _ in range(10_000)]
        assert sum(wrong_scores) / len(wrong_scores) == pytest.approx(0.5, abs=0.02)

    def test_error_free_generator_with_oracles_scores_one_on_every_prefix(self):
        sample = toy_problems(NOISELESS, 1)[0]
        gen = toy_generator(NOISELESS)
        step, _ = toy_oracle_verifiers(NOISELESS, noise=0.0)
        path = ""
        while True:
            segment = gen.generate_segment(
                build_context(sample.question, path), 20, 20, temperature=0.7
            )
            path += segment.text
            assert step.score_partial(sample.question, path) == 1.0
            if segment.ended:
                break


class TestBundle:
    def test_bundle_has_ppl_capability(self):
        bundle = toy_actor_bundle(NOISY, noise=0.1)
        sample = toy_problems(NOISY, 1)[0]
        assert bundle.text_ppl is not None
        assert bundle.text_ppl(build_context(sample.question, sample.path)) >= 1.0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ToyDomainSpec(error_rate=1.0)
        with pytest.raises(ValueError):
            ToyDomainSpec(num_steps=0)
        with pytest.raises(ValueError):
            ToyDomainSpec(operand_range=(5, 2))
