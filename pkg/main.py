"""
TriMorph v2026 - Main Entry Point
Command-line access to every pipeline stage. Reports go to stdout as JSON,
logs go to stderr.
"""

import sys
import json
import logging
import argparse
from typing import Optional, Sequence

from pydantic import ValidationError

from utils.config import get_config, get_version, is_debug
from src.errors import EmbeddingLookupError, InvalidInputError, NumericFailure, TriMorphError
from src.commands import (
    CanonizeJob,
    CliConfig,
    EditJob,
    InvertJob,
    RenderJob,
    json_ready,
    load_job,
    run_canonize,
    run_collapse_demo,
    run_deform,
    run_edit,
    run_embed_analyze,
    run_estimate_jnorm,
    run_invert,
    run_render,
    run_train,
)
from src.commands.estimate import MAP_KINDS
from src.train.config import CollapseDemoConfig, TrainConfig

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2

logger = logging.getLogger("trimorph")


# Configure logging
def setup_logging(verbose: bool = False):
    """Configure logging for the application; stdout is reserved for reports."""
    level = logging.DEBUG if verbose or is_debug() else get_config().LOG_LEVEL
    logging.basicConfig(
        level=level,
        format=get_config().LOG_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stderr),
        ],
        force=True,
    )


def _global_flags(parser: argparse.ArgumentParser, suppress: bool):
    """--seed/--out/--threads/-v, accepted before or after the subcommand."""
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None), help="Root RNG seed (default: 0)")
    parser.add_argument("--out", default=default("out"), help="Output directory (default: out)")
    parser.add_argument(
        "--threads", type=int, default=default(1), help="Worker threads; never changes output bytes"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", default=default(False), help="Enable verbose output"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimorph",
        description="TriMorph v2026 - Deformable Tri-Plane Generator Toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"{get_config().APP_NAME} v{get_version()}")

    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def job_command(name: str, help_text: str) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        cmd.add_argument("-c", "--config", help="JSON job file (unknown keys are rejected)")
        return cmd

    job_command("render", "Render a generated sample, optionally deformed or swept over alpha")

    deform = sub.add_parser("deform", parents=[common], help="Deform points through a mesh pair")
    deform.add_argument("--obs", required=True, help="Observation mesh (OBJ)")
    deform.add_argument("--canon", required=True, help="Canonical mesh (OBJ)")
    deform.add_argument("--points", required=True, help="Points tensor (NTC1, shape (N, 3))")

    estimate = sub.add_parser(
        "estimate-jnorm", parents=[common], help="Compare Jacobian norm estimators against the exact value"
    )
    estimate.add_argument("--dim", type=int, default=8)
    estimate.add_argument("--probes", type=int, default=1000)
    estimate.add_argument("--sigma", type=float, default=0.1)
    estimate.add_argument("--map", choices=MAP_KINDS, default="linear")

    job_command("invert", "Invert an image into the style space")
    job_command("canonize", "Build the embedding cache from canonicalized renders")

    train = job_command("train", "Run one training stage")
    train.add_argument("--stage", type=int, choices=(1, 2), help="Override the stage in the config")
    train.add_argument("--resume", help="Checkpoint directory to resume from")

    job_command("collapse-demo", "Paired runs with and without the embedding sensitivity penalty")

    analyze = sub.add_parser(
        "embed-analyze", parents=[common], help="Cosine similarity of images to main and noise prompts"
    )
    analyze.add_argument("--images", required=True, help="NTC1 matrix or embedding cache directory")
    analyze.add_argument("--main", required=True, help="Main prompt embeddings (NTC1)")
    analyze.add_argument("--noise", required=True, help="Noise prompt embeddings (NTC1)")

    job_command("edit", "Train an editing network and render its strength grid")
    return parser


def _with_seed(cfg, seed: Optional[int]):
    return cfg if seed is None else cfg.model_copy(update={"seed": seed})


def dispatch(cli: CliConfig, args: argparse.Namespace, seed: Optional[int]) -> dict:
    """Run one subcommand; `seed` is the explicit --seed, if any."""
    progress = cli.verbose
    name = cli.subcommand
    if name == "render":
        return run_render(load_job(RenderJob, cli.config), cli.seed, cli.out, cli.threads)
    if name == "deform":
        return run_deform(args.obs, args.canon, args.points, cli.out)
    if name == "estimate-jnorm":
        return run_estimate_jnorm(args.dim, args.probes, cli.seed, args.sigma, args.map)
    if name == "invert":
        return run_invert(load_job(InvertJob, cli.config), cli.seed, cli.out, progress)
    if name == "canonize":
        return run_canonize(load_job(CanonizeJob, cli.config), cli.seed, cli.out, progress)
    if name == "train":
        cfg = _with_seed(load_job(TrainConfig, cli.config), seed)
        if args.stage is not None:
            cfg = cfg.model_copy(update={"stage": args.stage})
        return run_train(cfg, cli.out, args.resume, progress)
    if name == "collapse-demo":
        return run_collapse_demo(_with_seed(load_job(CollapseDemoConfig, cli.config), seed), cli.out, progress)
    if name == "embed-analyze":
        return run_embed_analyze(args.images, args.main, args.noise, cli.out)
    if name == "edit":
        job = load_job(EditJob, cli.config)
        if seed is not None:
            job = job.model_copy(update={"editor": _with_seed(job.editor, seed)})
        return run_edit(job, cli.seed, cli.out, progress)
    raise InvalidInputError(f"Unknown subcommand {name!r}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run the subcommand and print its JSON report. Returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help and --version exit 0; usage errors exit 2 inside argparse
        return EXIT_OK if e.code in (0, None) else EXIT_INVALID

    setup_logging(args.verbose)
    try:
        cli = CliConfig(
            subcommand=args.subcommand,
            config=getattr(args, "config", None),
            seed=0 if args.seed is None else args.seed,
            out=args.out,
            threads=args.threads,
            verbose=args.verbose,
        )
        get_config().set("THREADS", cli.threads)
        report = dispatch(cli, args, args.seed)
    except NumericFailure as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    except (InvalidInputError, EmbeddingLookupError, ValidationError, FileNotFoundError, json.JSONDecodeError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INVALID
    except TriMorphError as e:
        logger.error(f"Error: {e}")
        return EXIT_INVALID

    print(json.dumps(json_ready(report), sort_keys=True))
    return EXIT_OK


def main():
    """Application entry point with CLI arguments."""
    try:
        sys.exit(run())
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.", file=sys.stderr)
        sys.exit(130)


if __name__ == "__main__":
    main()
