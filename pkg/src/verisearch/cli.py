"""Command-line entry points: eval, ablate-alpha, scaling-curve, self-think,
serve-trace."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .actors import ActorBundle, mock_actor_bundle, remote_actor_bundle
from .actors.toy import ToyDomainSpec, toy_actor_bundle, toy_problems
from .corpus import Sample, load_dataset
from .harness import EvalReport, StrategySpec, run_alpha_ablation, run_eval, run_scaling_curve
from .search import SearchConfig, search
from .selfthink import FilterPolicy, run_self_thinking


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--c-puct", type=float, default=1.25)
    parser.add_argument("--alpha", type=float, default=1.0)
    parser.add_argument("--iterations", type=int, default=40)
    parser.add_argument("--time-budget", type=float, default=None,
                        help="seconds per search; overrides --iterations when set")
    parser.add_argument("--expansion-width", type=int, default=20)
    parser.add_argument("--rollout-max-tokens", type=int, default=300)
    parser.add_argument("--path-max-tokens", type=int, default=400)
    parser.add_argument("--select-prob", type=float, default=0.5)
    parser.add_argument("--temperature", type=float, default=0.7)
    parser.add_argument("--seed", type=int, default=0)


def _add_actor_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--actors", choices=("mock", "toy", "remote"), default="toy")
    parser.add_argument("--endpoint", default=None, help="remote actor service address")
    parser.add_argument("--script", default=None, help="JSON script file for mock actors")
    parser.add_argument("--dataset", default=None, help="line-delimited record file")
    parser.add_argument("--out", default=None, help="write machine-readable records here")
    parser.add_argument("--toy-count", type=int, default=50)
    parser.add_argument("--toy-steps", type=int, default=3)
    parser.add_argument("--toy-error-rate", type=float, default=0.3)
    parser.add_argument("--toy-noise", type=float, default=0.0,
                        help="verifier verdict flip probability for toy oracles")


def _search_config(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(
        c_puct=args.c_puct,
        alpha=args.alpha,
        iterations=None if args.time_budget is not None else args.iterations,
        time_budget=args.time_budget,
        expansion_width=args.expansion_width,
        rollout_max_tokens=args.rollout_max_tokens,
        path_max_tokens=args.path_max_tokens,
        select_prob=args.select_prob,
        temperature=args.temperature,
        rng_seed=args.seed,
    )


def _build_actors(args: argparse.Namespace) -> ActorBundle:
    if args.actors == "remote":
        if not args.endpoint:
            raise SystemExit("--endpoint is required with --actors remote")
        return remote_actor_bundle(args.endpoint, seed=args.seed)
    if args.actors == "mock":
        if not args.script:
            raise SystemExit("--script is required with --actors mock")
        script = json.loads(Path(args.script).read_text(encoding="utf-8"))
        return mock_actor_bundle(script, seed=args.seed)
    spec = ToyDomainSpec(
        num_steps=args.toy_steps, error_rate=args.toy_error_rate, seed=args.seed
    )
    return toy_actor_bundle(spec, noise=args.toy_noise)


def _load_problems(args: argparse.Namespace) -> list[Sample]:
    if args.dataset:
        return load_dataset(args.dataset)
    if args.actors != "toy":
        raise SystemExit("--dataset is required unless --actors toy synthesizes one")
    spec = ToyDomainSpec(
        num_steps=args.toy_steps, error_rate=args.toy_error_rate, seed=args.seed
    )
    return toy_problems(spec, args.toy_count)


def _write_rows(path: str | None, rows: list[dict]) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _print_report(report: EvalReport) -> None:
    strategy = report.strategy
    print(
        f"{report.dataset_name}  strategy={strategy.kind}  paths={strategy.num_paths}  "
        f"accuracy={report.accuracy:.4f}  wall={report.wall_time_s:.2f}s"
    )


def _cmd_eval(args: argparse.Namespace) -> int:
    actors = _build_actors(args)
    problems = _load_problems(args)
    cfg = _search_config(args)
    strategy = StrategySpec(kind=args.strategy, num_paths=args.num_paths,
                            temperature=args.temperature)
    report = run_eval(problems, actors, strategy, cfg,
                      dataset_name=args.dataset or "toy", workers=args.workers)
    _print_report(report)
    rows = [dict(r, strategy=strategy.kind, dataset=report.dataset_name)
            for r in report.to_rows()]
    _write_rows(args.out, rows)
    return 0


def _cmd_ablate_alpha(args: argparse.Namespace) -> int:
    alphas = [float(a) for a in args.alphas.split(",")]
    rows: list[dict] = []
    for seed in _parse_seeds(args):
        actors = _build_actors(_with_seed(args, seed))
        problems = _load_problems(_with_seed(args, seed))
        cfg = _search_config(_with_seed(args, seed))
        reports = run_alpha_ablation(problems, actors, cfg, alphas,
                                     dataset_name=args.dataset or "toy",
                                     workers=args.workers)
        labels = ["self_consistency"] + [f"core(alpha={a})" for a in alphas]
        for label, report in zip(labels, reports):
            print(f"seed={seed}  {label:<22} accuracy={report.accuracy:.4f}")
            rows.append({"seed": seed, "row": label, "accuracy": report.accuracy,
                         "convention": "per-seed"})
    _summarize(rows)
    _write_rows(args.out, rows)
    return 0


def _cmd_scaling_curve(args: argparse.Namespace) -> int:
    budgets = [int(b) for b in args.budgets.split(",")]
    rows: list[dict] = []
    for seed in _parse_seeds(args):
        actors = _build_actors(_with_seed(args, seed))
        problems = _load_problems(_with_seed(args, seed))
        cfg = _search_config(_with_seed(args, seed))
        for row in run_scaling_curve(problems, actors, cfg, budgets,
                                     dataset_name=args.dataset or "toy"):
            print(f"seed={seed}  budget={row['budget']:>3}  {row['strategy']:<17}"
                  f" accuracy={row['accuracy']:.4f}")
            rows.append({"seed": seed, "convention": "per-seed", **row})
    _summarize_curve(rows)
    _write_rows(args.out, rows)
    return 0


def _cmd_self_think(args: argparse.Namespace) -> int:
    actors = _build_actors(args)
    problems = _load_problems(args)
    cfg = _search_config(args)
    policy = FilterPolicy(
        score_threshold=args.score_threshold,
        require_correct_answer=not args.allow_wrong_answers,
        alpha=args.alpha,
    )
    manifests = run_self_thinking(
        problems, actors, cfg, policy,
        rounds=args.rounds,
        paths_per_question=args.paths_per_question,
        out_dir=args.out_dir,
    )
    for manifest in manifests:
        print(f"round={manifest.round_index}  generated={manifest.num_generated}  "
              f"kept={manifest.num_kept}  saturated={manifest.saturated}")
    return 0


def _cmd_serve_trace(args: argparse.Namespace) -> int:
    actors = _build_actors(args)
    problems = _load_problems(args)
    cfg = _search_config(args)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for question_id, sample in enumerate(problems):
            def emit(record) -> None:
                payload = {"question_id": question_id, **dataclasses.asdict(record)}
                out.write(json.dumps(payload, ensure_ascii=False) + "\n")
            search(sample.question, actors, cfg, on_iteration=emit)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _parse_seeds(args: argparse.Namespace) -> list[int]:
    if args.seeds:
        return [int(s) for s in args.seeds.split(",")]
    return [args.seed]


def _with_seed(args: argparse.Namespace, seed: int) -> argparse.Namespace:
    clone = argparse.Namespace(**vars(args))
    clone.seed = seed
    return clone


def _summarize(rows: list[dict]) -> None:
    by_label: dict[str, list[float]] = {}
    for row in rows:
        by_label.setdefault(row["row"], []).append(row["accuracy"])
    for label, values in by_label.items():
        mean = sum(values) / len(values)
        print(f"summary  {label:<22} mean={mean:.4f}  max={max(values):.4f}  "
              f"(over {len(values)} seed(s); convention: mean and max)")


def _summarize_curve(rows: list[dict]) -> None:
    by_key: dict[tuple[int, str], list[float]] = {}
    for row in rows:
        by_key.setdefault((row["budget"], row["strategy"]), []).append(row["accuracy"])
    for (budget, strategy), values in sorted(by_key.items()):
        mean = sum(values) / len(values)
        print(f"summary  budget={budget:>3}  {strategy:<17} mean={mean:.4f}  "
              f"max={max(values):.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verisearch",
        description="Verifier-guided tree search over reasoning paths",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p_eval = commands.add_parser("eval", help="evaluate one decoding strategy")
    p_eval.add_argument("--strategy", choices=("greedy", "self_consistency", "core"),
                        default="core")
    p_eval.add_argument("--num-paths", type=int, default=40)
    p_eval.add_argument("--workers", type=int, default=1)
    _add_search_flags(p_eval)
    _add_actor_flags(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_ablate = commands.add_parser("ablate-alpha", help="sweep the step-guidance weight")
    p_ablate.add_argument("--alphas", default="0,0.1,1")
    p_ablate.add_argument("--seeds", default=None, help="comma-separated run seeds")
    p_ablate.add_argument("--workers", type=int, default=1)
    _add_search_flags(p_ablate)
    _add_actor_flags(p_ablate)
    p_ablate.set_defaults(func=_cmd_ablate_alpha)

    p_curve = commands.add_parser("scaling-curve", help="accuracy vs path budget")
    p_curve.add_argument("--budgets", default="5,10,20,30,40")
    p_curve.add_argument("--seeds", default=None)
    _add_search_flags(p_curve)
    _add_actor_flags(p_curve)
    p_curve.set_defaults(func=_cmd_scaling_curve)

    p_think = commands.add_parser("self-think", help="run the data generation loop")
    p_think.add_argument("--rounds", type=int, default=1)
    p_think.add_argument("--paths-per-question", type=int, default=50)
    p_think.add_argument("--score-threshold", type=float, default=0.5)
    p_think.add_argument("--allow-wrong-answers", action="store_true")
    p_think.add_argument("--out-dir", default="selfthink_out")
    _add_search_flags(p_think)
    _add_actor_flags(p_think)
    p_think.set_defaults(func=_cmd_self_think)

    p_trace = commands.add_parser("serve-trace", help="emit per-iteration search traces")
    _add_search_flags(p_trace)
    _add_actor_flags(p_trace)
    p_trace.set_defaults(func=_cmd_serve_trace)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
