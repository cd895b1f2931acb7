"""
CLI Module

Command-line front end with the verbs train, eval, relabel, train-offline and analyze. Command
flags are folded into the same raw `key = value` overrides a config file holds, so a flag and a
file line mean exactly the same thing. Any error that escapes a command is reported as one JSON
line on stderr and mapped to the exit code of its category.

Functions:
    build_parser(): The argparse parser of every verb.
    main(): Parse arguments, run the verb, return the exit code.
"""

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional, Sequence

from aeolus.aeolus_engine.aeolus_engine import AeolusEngine
from aeolus.aeolus_engine.experiment_config import ExperimentConfig, load_experiment_config
from aeolus.argus_analysis.analysis_report import ANALYSIS_KINDS, analyze
from aeolus.errors import AeolusError, ConfigError
from aeolus.mnemosyne_replay.relabel import relabel_file
from aeolus.themis_tasks.task_spec import TASK_IDS

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
IO_EXIT_CODE = 4


def _add_run_arguments(parser: argparse.ArgumentParser, algorithm: str):
    parser.add_argument("--config", help="key = value experiment file")
    parser.add_argument("--task", choices=TASK_IDS, help="task id")
    parser.add_argument("--steps", type=int, help="environment steps (train) or learner steps (train-offline)")
    parser.add_argument("--seed", type=int, help="root seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="extra config override, e.g. --set sim.pixel_noise=0.5 (repeatable)",
    )
    parser.add_argument("--progress", action="store_true", help="show progress bars")
    parser.set_defaults(algorithm=algorithm)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bof", description="Box o' Flows simulator, learners and analysis."
    )
    parser.add_argument(
        "--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"), help="logging level"
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    train = verbs.add_parser("train", help="online MPO training")
    _add_run_arguments(train, "mpo")
    train.add_argument("--fixed-beta", type=float, help="hold the E-step temperature at this value")
    train.add_argument("--avg-q", action="store_true", help="average the TD target over sampled next actions")
    train.add_argument("--threaded", action="store_true", help="separate actor and learner threads")
    train.add_argument("--profile", action="store_true", help="line-profile simulator and learner steps")

    evaluate = verbs.add_parser("eval", help="evaluate a saved learner")
    _add_run_arguments(evaluate, "mpo")
    evaluate.add_argument("--checkpoint", required=True, help="BOFP learner checkpoint")
    evaluate.add_argument("--algorithm", choices=("mpo", "crr"), default="mpo", help="checkpoint kind")
    evaluate.add_argument("--episodes", type=int, default=10, help="mean-mode episodes")

    relabel = verbs.add_parser("relabel", help="recompute the rewards of an episode log")
    relabel.add_argument("--in", dest="inputs", required=True, help="source episode log")
    relabel.add_argument("--task", required=True, choices=TASK_IDS + ("constant",), help="new reward law")
    relabel.add_argument("--out", required=True, help="relabeled episode log")

    offline = verbs.add_parser("train-offline", help="offline CRR training on an episode log")
    _add_run_arguments(offline, "crr")
    offline.add_argument("--data", required=True, help="episode log to train on")
    offline.add_argument("--beta", type=float, help="CRR advantage temperature")
    offline.add_argument("--bc", action="store_true", help="plain behavior cloning (unit weights)")
    offline.add_argument("--resume", action="store_true", help="continue from the last checkpoint in --out")

    analysis = verbs.add_parser("analyze", help="heatmaps, reward curves and filmstrips")
    analysis.add_argument("kind", choices=ANALYSIS_KINDS)
    analysis.add_argument("--in", dest="inputs", nargs="+", required=True, help="episode logs or CSVs")
    analysis.add_argument("--out", required=True, help="output directory")
    analysis.add_argument("--bins", type=int, help="heatmap bin size in pixels")
    analysis.add_argument("--episodes", type=int, help="trailing episodes of the visitation map")
    analysis.add_argument("--color", default="orange", help="ball color of the visitation map")
    analysis.add_argument("--episode", type=int, help="episode id to render")
    analysis.add_argument("--stride", type=int, default=1, help="control steps between frames")
    analysis.add_argument("--window", type=int, default=10, help="moving-average window")
    return parser


def _parse_set(items: Sequence[str]) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f'--set expects KEY=VALUE, got "{item}"')
        key, value = (part.strip() for part in item.split("=", 1))
        overrides[key] = value
    return overrides


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file, then `--set` overrides, then dedicated flags."""
    overrides = _parse_set(args.set)
    overrides["algorithm"] = args.algorithm
    for key in ("task", "steps", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = str(value)
    if getattr(args, "fixed_beta", None) is not None:
        overrides["mpo.fixed_beta"] = repr(args.fixed_beta)
    if getattr(args, "avg_q", False):
        overrides["mpo.avg_q"] = "true"
    if getattr(args, "threaded", False):
        overrides["threaded"] = "true"
    if getattr(args, "beta", None) is not None:
        overrides["crr.beta"] = repr(args.beta)
    if getattr(args, "bc", False):
        overrides["crr.behavior_cloning"] = "true"
    return load_experiment_config(args.config, overrides)


def run_command(args: argparse.Namespace):
    if args.verb == "relabel":
        relabel_file(args.inputs, args.task, args.out)
    elif args.verb == "analyze":
        analyze(
            args.kind, args.inputs, args.out, bins=args.bins, episodes=args.episodes, color=args.color,
            episode=args.episode, stride=args.stride, window=args.window,
        )
    elif args.verb == "train":
        AeolusEngine(resolve_config(args), progress=args.progress, profile=args.profile).run_online()
    elif args.verb == "train-offline":
        AeolusEngine(resolve_config(args), progress=args.progress).run_offline(args.data, resume=args.resume)
    elif args.verb == "eval":
        AeolusEngine(resolve_config(args), progress=args.progress).evaluate_checkpoint(args.checkpoint, args.episodes)


def _report(category: str, message: str):
    sys.stderr.write(json.dumps({"error": category, "message": message}) + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    """Run one CLI command.

    Returns:
        int: 0 on success, else the exit code of the error category (config 2, data and log 3,
            io 4, simulation 5, contract 6, anything else 1).
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        run_command(args)
    except AeolusError as err:
        logger.debug("Command failed", exc_info=True)
        _report(err.category, str(err))
        return err.exit_code
    except OSError as err:
        _report("io", str(err))
        return IO_EXIT_CODE
    except Exception as err:
        logger.exception("Unexpected failure")
        _report("error", f"{type(err).__name__}: {err}")
        return 1
    return 0
