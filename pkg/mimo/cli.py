# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""Command line interface for training and analyzing multi-input multi-output ensembles."""

import argparse
import logging
import os
import sys
import typing

from mimo import analysis, data, landscape, models, tensor, training, _utils
from mimo.experiment import AnalysisKind, Experiment, ExperimentConfig, RunManifest

EXIT_SUCCESS = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

# Command line parsing helpers

CLI_PARSER = argparse.ArgumentParser(prog="mimo", description=__doc__)
CLI_PARSER.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress (repeat for debug output)")
CLI_SUBPARSERS = CLI_PARSER.add_subparsers(dest="subcommand")


def subcommand(args=None, parent=CLI_SUBPARSERS):
    """Decorate a function so that it is usable as a subcommand of 'mimo'.  The subcommand name is the function name
    without its ``cmd_`` prefix, with underscores replaced by dashes."""
    if args is None:
        args = []

    def decorator(func):
        """Decorate the function."""
        name = func.__name__.removeprefix("cmd_").replace("_", "-")
        parser = parent.add_parser(name, help=func.__doc__)
        parser.add_argument("config", help="experiment configuration (JSON)")
        parser.add_argument("--output-dir", help="directory for all outputs; overrides the configured output_dir")
        parser.add_argument("--seed", type=int, help="set every seed of the experiment to this value")
        for arg in args:
            parser.add_argument(*arg[0], **arg[1])
        parser.set_defaults(func=func)
        return func

    return decorator


def argument(*name_or_flags, **kwargs):
    """Used by the '@subcommand()' decorator to add arguments to the created subcommand."""
    return list(name_or_flags), kwargs


# Messaging helper functions

def _message(msg: str) -> None:
    sys.stdout.write(msg)
    sys.stdout.write(os.linesep)


def _error(msg: str) -> None:
    sys.stderr.write(msg)
    sys.stderr.write(os.linesep)


def _experiment(args: argparse.Namespace) -> Experiment:
    config = ExperimentConfig.load(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return Experiment(config, args.output_dir)


def _report(manifest: RunManifest, experiment: Experiment) -> None:
    _message(f"{manifest.command}: wrote {len(manifest.files)} files to {experiment.output_dir}")
    for name in manifest.files:
        _message(f"  {name}")


# Subcommands

@subcommand()
def cmd_train(args: argparse.Namespace) -> None:
    """Train the configured network and write its checkpoint and loss curve."""
    experiment = _experiment(args)
    _report(experiment.train(), experiment)


@subcommand([argument("analysis", choices=[kind.value for kind in AnalysisKind], help="the analysis to run"),
             argument("--checkpoint", help="checkpoint to analyze; defaults to the one written by 'mimo train'")])
def cmd_analyze(args: argparse.Namespace) -> None:
    """Run an analysis on a trained checkpoint."""
    experiment = _experiment(args)
    _report(experiment.analyze(args.analysis, args.checkpoint), experiment)


@subcommand()
def cmd_sweep(args: argparse.Namespace) -> None:
    """Train and evaluate every value of the configured sweep axis."""
    experiment = _experiment(args)
    _report(experiment.sweep(), experiment)


@subcommand()
def cmd_bias_variance(args: argparse.Namespace) -> None:
    """Decompose the expected test error of the configured regression setup into bias and variance."""
    experiment = _experiment(args)
    _report(experiment.bias_variance(), experiment)


@subcommand([argument("--checkpoint", help="three-subnetwork checkpoint; defaults to the one written by 'mimo train'"),
             argument("--resolution", type=int, help="grid points per axis; overrides analysis.resolution")])
def cmd_landscape(args: argparse.Namespace) -> None:
    """Evaluate the weight-space plane through three subnetworks and project their prediction trajectories."""
    experiment = _experiment(args)
    _report(experiment.landscape(args.checkpoint, args.resolution), experiment)


# Exit codes

_NUMERIC_ERRORS = (tensor.NumericOverflowError, training.NonFiniteLossError, training.DivergenceError,
                   analysis.ReplicateError, landscape.DegeneratePlaneError)
_IO_ERRORS = (OSError, training.CheckpointError, data.DataError)
_USAGE_ERRORS = (_utils.ConfigError, analysis.AnalysisError, landscape.LandscapeError, models.ModelError,
                 training.TrainingError)


def exit_code(exc: BaseException) -> int:
    """Get the exit code of the command line interface for an exception.

    :param exc: the exception that ended a command
    :return: 3 for numeric failures, 4 for input/output failures, 2 for configuration and usage errors
    """
    if isinstance(exc, _NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(exc, _IO_ERRORS):
        return EXIT_IO
    if isinstance(exc, _USAGE_ERRORS):
        return EXIT_USAGE
    return 1


def run(argv: typing.Optional[typing.Sequence[str]] = None) -> int:
    """Run the command line interface.

    :param argv: the arguments, defaulting to ``sys.argv[1:]``
    :return: the exit code
    """
    try:
        cli_args = CLI_PARSER.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SUCCESS if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level={0: logging.WARNING, 1: logging.INFO}.get(cli_args.verbose, logging.DEBUG),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if cli_args.subcommand is None:
        CLI_PARSER.print_help()
        return EXIT_USAGE
    try:
        cli_args.func(cli_args)
    except (_utils.MimoError, OSError) as exc:
        code = exit_code(exc)
        _error(f"error: {exc}")
        return code
    return EXIT_SUCCESS


# Main

def main() -> None:
    """Start the command line interface."""
    sys.exit(run())


if __name__ == '__main__':
    main()
