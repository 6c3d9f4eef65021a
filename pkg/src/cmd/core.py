import argparse
import sys
from typing import List, Optional

import structlog

from ..harness.experiment import ExperimentConfig, Scheme, load_config, load_summaries, run_experiment
from ..harness.plots import PlotKind, emit_plots
from ..harness.summary import compare_table
from ..io.checkpoint import describe_checkpoint
from ..mdp.reward import RewardKind
from ..misc.errors import DirpError
from ..misc.logops import configure_logging
from ..misc.settings import DirpSettings

LOG = structlog.get_logger(__name__)


def dirp_run(args: argparse.Namespace, settings: DirpSettings) -> int:
    """Run an experiment and print its summary."""
    config = load_config(args.config) if args.config else ExperimentConfig(output_dir=settings.output_dir)
    config = config.with_overrides(scheme=args.scheme, reward=args.reward, seeds=args.seed, output_dir=args.out)
    summary = run_experiment(config, progress=settings.progress and sys.stderr.isatty())
    print(compare_table([summary]))
    return 0


def dirp_plot(args: argparse.Namespace, settings: DirpSettings) -> int:
    summaries = load_summaries(args.inputs)
    kinds = [PlotKind(args.kind)] if args.kind else list(PlotKind)
    for kind in kinds:
        for path in emit_plots(summaries, kind, args.out or settings.output_dir):
            print(path)
    return 0


def dirp_inspect_checkpoint(args: argparse.Namespace, settings: DirpSettings) -> int:
    print(describe_checkpoint(args.path))
    return 0


def dirp_compare(args: argparse.Namespace, settings: DirpSettings) -> int:
    """Table of the headline metrics of several runs."""
    print(compare_table(load_summaries(args.inputs)))
    return 0


def register_dirp(parser: argparse.ArgumentParser) -> None:
    """Register all subcommands and their expected arguments."""
    sub = parser.add_subparsers(dest="command", required=True)

    def register_dirp_run():
        p = sub.add_parser("run", help="Run a scheme over one or more seeds.")
        p.add_argument("--config", help="Experiment config (JSON). Defaults apply when omitted.")
        p.add_argument("--scheme", choices=[s.value for s in Scheme])
        p.add_argument("--reward", choices=[r.value for r in RewardKind])
        p.add_argument("--seed", type=int, action="append", help="Seed to run; repeat for several.")
        p.add_argument("--out", help="Output directory.")
        p.set_defaults(func=dirp_run)

    def register_dirp_plot():
        p = sub.add_parser("plot", help="Plot run summaries as SVG.")
        p.add_argument("--kind", choices=[k.value for k in PlotKind], help="Plot kind; all kinds when omitted.")
        p.add_argument("--in", dest="inputs", nargs="+", required=True, help="Summary files or run directories.")
        p.add_argument("--out", help="Directory for the SVG files.")
        p.set_defaults(func=dirp_plot)

    def register_dirp_inspect_checkpoint():
        p = sub.add_parser("inspect-checkpoint", help="Describe the networks stored in a checkpoint.")
        p.add_argument("path")
        p.set_defaults(func=dirp_inspect_checkpoint)

    def register_dirp_compare():
        p = sub.add_parser("compare", help="Compare the summaries of several runs.")
        p.add_argument("inputs", nargs="+", help="Summary files or run directories.")
        p.set_defaults(func=dirp_compare)

    register_dirp_run()
    register_dirp_plot()
    register_dirp_inspect_checkpoint()
    register_dirp_compare()


def build_parser(settings: DirpSettings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirp",
        description="Inter-cell inter-slice radio resource partitioning experiments.",
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["debug", "info", "warning", "error"],
    )
    register_dirp(parser)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = DirpSettings.from_env()
    except DirpError as e:
        print(f"dirp: {e}", file=sys.stderr)
        return 1

    args = build_parser(settings).parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args, settings)
    except (DirpError, OSError) as e:
        LOG.error("command failed", command=args.command, error=str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
