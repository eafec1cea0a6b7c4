"""
Calibrated Recommendation Pipeline - Main Application Entrypoint

This module provides a unified interface for:
1. Dataset preprocessing (MovieLens, Taste Profile, generic CSV)
2. Candidate generation with collaborative-filtering recommenders
3. Genre-calibrated post-processing over the trade-off grid
4. Offline evaluation and the decision protocol

Usage:
    # As a module
    from app.pipeline import load_experiment_config, run_all

    # As a script
    python app.py --help
"""

import argparse
import sys
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.table import Table

from app.config import configure_logging, ensure_output_dirs, validate_settings
from app.core.exceptions import AppException
from app.core.logging import get_logger

logger = get_logger(__name__)
console = Console()


def _banner(title: str) -> None:
    print(f"\n{'='*60}")
    print(f"  {title}")
    print(f"{'='*60}")


def _load_config(args: argparse.Namespace):
    """Experiment config from --config with CLI overrides applied."""
    from app.pipeline import get_default_config, load_experiment_config

    config = load_experiment_config(Path(args.config)) if args.config else get_default_config()
    return config.with_overrides(
        seed=args.seed,
        jobs=args.jobs,
        output_dir=Path(args.out) if args.out else None,
    )


def _stats_table(stats, title: str) -> Table:
    table = Table(title=title)
    for column in ("Dataset", "|U|", "|I|", "|W|", "|G|"):
        table.add_column(column, justify="left" if column == "Dataset" else "right")
    for s in stats:
        table.add_row(s.label, f"{s.users:,}", f"{s.items:,}", f"{s.interactions:,}", f"{s.genres:,}")
    return table


def run_stages(args: argparse.Namespace, names: list[str]) -> int:
    """Run the named stages of the configured experiment."""
    from app.pipeline import ExperimentRunner
    from app.protocol import render_decision_table

    config = _load_config(args)
    if getattr(args, "predictions", None):
        config = config.with_external(Path(args.predictions), args.name)
        names = ["recommend"] + names
    output_dir = ensure_output_dirs(Path(config.output_dir))

    _banner(f"{' + '.join(name.upper() for name in names)}")
    print(config.summary)

    runner = ExperimentRunner.for_stages(config, names, output_dir)
    manifest = runner.run()
    context = runner.context

    if context is not None and context.stats:
        console.print(_stats_table(context.stats, f"{config.dataset.name} statistics"))

    _banner("RUN COMPLETE")
    print(f"  Output: {output_dir}")
    print(f"  Done: {len(manifest.done)}")
    print(f"  Failed: {len(manifest.failed)}")
    if manifest.failed:
        print("\n  Failed combinations:")
        for key in manifest.failed[:5]:
            print(f"    - {key}: {manifest.errors.get(key, '')}")
        if len(manifest.failed) > 5:
            print(f"    ... and {len(manifest.failed) - 5} more")

    if context is not None and context.report is not None:
        print()
        render_decision_table(context.report, console)
        print(f"\n  Winner: {context.report.winner.label} (s={context.report.winner_row.s:.4f})")
    print()
    return 0


def run_decide(args: argparse.Namespace) -> int:
    """Decide from a metrics or coefficient CSV without a config."""
    if not args.metrics:
        return run_stages(args, ["decide"])

    import pandas as pd

    from app.protocol import decision_report, render_decision_table, write_decision

    metrics_path = Path(args.metrics)
    if not metrics_path.exists():
        raise FileNotFoundError(f"Metrics file not found: {metrics_path}")
    frame = pd.read_csv(metrics_path, dtype={"recommender": str, "divergence": str, "balance": str, "lambda": str})
    report = decision_report(frame, pool_lambdas=args.pool_lambdas)
    output_dir = ensure_output_dirs(Path(args.out) if args.out else metrics_path.parent)
    csv_path, winner_path = write_decision(report, output_dir)

    _banner("DECISION PROTOCOL")
    render_decision_table(report, console)
    print(f"\n  Winner: {report.winner.label} (s={report.winner_row.s:.4f})")
    if report.skipped:
        print(f"  Skipped (zero MAP): {', '.join(report.skipped)}")
    print(f"  Report: {csv_path}")
    print(f"  Winner record: {winner_path}\n")
    return 0


def run_describe(args: argparse.Namespace) -> int:
    """Dataset statistics before (and optionally after) preprocessing."""
    from app.ingest import describe, describe_raw, preprocess
    from app.pipeline import DatasetConfig
    from app.pipeline.stages import load_raw
    from app.schemas.dataset import PreprocessConfig

    dataset = DatasetConfig(domain=args.domain, name=args.domain, interactions=args.interactions, genres=args.genres)
    raw = load_raw(dataset)
    stats = [describe_raw(raw)]
    if args.preprocess:
        stats.append(describe(preprocess(raw, PreprocessConfig(), args.domain)))
    console.print(_stats_table(stats, f"{args.domain} dataset statistics"))
    return 0


def run_oracle(args: argparse.Namespace) -> int:
    """Greedy against exhaustive search on random instances."""
    from app.selection import compare_with_oracle, greedy_to_optimal_ratio

    seeds = range(args.seed or 0, (args.seed or 0) + args.instances)
    comparisons = compare_with_oracle(
        seeds,
        n_candidates=args.candidates,
        n=args.n,
        lambda_u=args.lambda_u,
        divergence=args.divergence,
        balance=args.balance,
    )
    summary = greedy_to_optimal_ratio(comparisons)

    _banner("GREEDY VS EXHAUSTIVE OPTIMUM")
    table = Table()
    table.add_column("Statistic")
    table.add_column("Value", justify="right")
    for key, value in summary.items():
        table.add_row(key, f"{value:.6g}")
    console.print(table)
    print()
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point for CLI usage."""
    parser = argparse.ArgumentParser(
        description="Calibrated Recommendation Pipeline",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    python app.py run --config configs/movielens.ini --jobs 4
    python app.py postprocess --config configs/desk.ini --predictions preds.csv --name MyModel
    python app.py decide --metrics coefficients.csv --pool-lambdas
    python app.py describe movie data/ratings.csv data/movies.csv --preprocess
    python app.py oracle --instances 200
        """
    )
    parser.add_argument("--log-level", help="Override LOG_LEVEL")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    def add_common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", help="Experiment INI file")
        sub.add_argument("--seed", type=int, help="Root seed")
        sub.add_argument("--jobs", type=int, help="Worker processes")
        sub.add_argument("--out", help="Output directory")

    for name, help_text in (
        ("preprocess", "Filter the dataset and draw the splits"),
        ("recommend", "Train recommenders and write candidates"),
        ("evaluate", "Evaluate calibrated lists"),
        ("run", "Run every stage, preprocess to decide"),
    ):
        add_common(subparsers.add_parser(name, help=help_text))

    postprocess_parser = subparsers.add_parser("postprocess", help="Calibrated selection over the trade-off grid")
    add_common(postprocess_parser)
    postprocess_parser.add_argument("--predictions", help="External predictions CSV (user_id,item_id,predicted_weight)")
    postprocess_parser.add_argument("--name", default="External", help="Label of the external recommender")

    decide_parser = subparsers.add_parser("decide", help="Apply the decision protocol")
    add_common(decide_parser)
    decide_parser.add_argument("--metrics", help="Metrics (map,mace,mrmc) or coefficient (cce,cmc) CSV")
    decide_parser.add_argument("--pool-lambdas", action="store_true", help="Average over the lambda axis first")

    describe_parser = subparsers.add_parser("describe", help="Print dataset statistics")
    describe_parser.add_argument("domain", choices=["movie", "song", "generic"])
    describe_parser.add_argument("interactions", help="Ratings / triplets / interactions file")
    describe_parser.add_argument("genres", help="Movies / genre annotations / genres file")
    describe_parser.add_argument("--preprocess", action="store_true", help="Also show post-filter statistics")

    oracle_parser = subparsers.add_parser("oracle", help="Compare greedy selection with exhaustive search")
    oracle_parser.add_argument("--instances", type=int, default=200)
    oracle_parser.add_argument("--candidates", type=int, default=8)
    oracle_parser.add_argument("-n", type=int, default=3)
    oracle_parser.add_argument("--lambda", dest="lambda_u", type=float, default=0.5)
    oracle_parser.add_argument("--divergence", choices=["kl", "he", "chi"], default="kl")
    oracle_parser.add_argument("--balance", choices=["lin", "log"], default="lin")
    oracle_parser.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    try:
        validate_settings()
        configure_logging(args.log_level)

        if args.command == "run":
            return run_stages(args, ["preprocess", "recommend", "postprocess", "evaluate", "decide"])
        elif args.command in ("preprocess", "recommend", "postprocess", "evaluate"):
            return run_stages(args, [args.command])
        elif args.command == "decide":
            return run_decide(args)
        elif args.command == "describe":
            return run_describe(args)
        elif args.command == "oracle":
            return run_oracle(args)
        else:
            parser.print_help()
            return 0
    except (AppException, FileNotFoundError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
