"""
Command line

    cyclenet generate   [--full-grid]
    cyclenet train      --method {dnn,lm,rg,knn,dt}
    cyclenet evaluate   [--method M ...] [--regime R]
    cyclenet size-study [--sizes 1500,3000,...]
    cyclenet transfer   [--epochs N]
    cyclenet report

Every command accepts --config, --out, --workers, --seed and --verbose.

Exit codes: 0 success, 2 usage, 3 configuration, 4 other failures, 5 I/O.
"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from cyclenet import experiments
from cyclenet.core.config import load_config
from cyclenet.core.errors import ConfigError, CycleNetError, UsageError
from cyclenet.core.evaluation import METRICS, MetricReport
from cyclenet.core.utils import create_logger, format_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FAILURE = 4
EXIT_IO = 5


def _sizes(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON document overriding the defaults")
    common.add_argument("--out", type=Path, help="output directory, overrides 'output_dir'")
    common.add_argument("--workers", type=int, help="simulation processes")
    common.add_argument("--seed", type=int, help="base seed, every stage seed is derived from it")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="cyclenet", description="Drive-cycle simulator and surrogate models")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", parents=[common], help="simulate the regimes")
    generate.add_argument("--full-grid", action="store_true", help="run the full factorial campaign instead")

    train = sub.add_parser("train", parents=[common], help="fit one model on the training regime")
    train.add_argument("--method", choices=experiments.METHODS, required=True)

    evaluate = sub.add_parser("evaluate", parents=[common], help="score fitted models on a regime")
    evaluate.add_argument("--method", choices=experiments.METHODS, action="append", dest="methods")
    evaluate.add_argument("--regime", choices=experiments.REGIMES, default="test-1a")

    size = sub.add_parser("size-study", parents=[common], help="accuracy against training set size")
    size.add_argument("--sizes", type=_sizes, help="rows per training set, multiples of the trace length")

    transfer = sub.add_parser("transfer", parents=[common], help="adapt the network to the shifted regime")
    transfer.add_argument("--epochs", type=int, help="transfer epochs")

    sub.add_parser("report", parents=[common], help="merge every metric document")
    return parser


def print_reports(reports: Sequence[MetricReport]) -> None:
    if not reports:
        return
    outputs = list(reports[0].outputs)
    for metric in METRICS:
        rows = [[r.model] + [r.value(o, metric) for o in outputs] for r in reports]
        print(f"\n{metric}")
        print(format_table(["model"] + outputs, rows))


def run(args: argparse.Namespace) -> None:
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    config = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out, workers=args.workers)
    create_logger(
        Path(config.output_dir) / "logs" / "cyclenet.log",
        level=logging.DEBUG if args.verbose else logging.INFO,
    )
    logger.info("%s: config %s, output %s", args.command, config.hash()[:12], config.output_dir)

    if args.command == "generate":
        entry = experiments.cmd_generate(config, full_grid=args.full_grid)
        rows = [[name, e["cases"], e["rows"], e["flagged_rows"]] for name, e in entry.items()]
        print(format_table(["regime", "cases", "rows", "flagged"], rows))
    elif args.command == "train":
        meta = experiments.cmd_train(config, args.method)
        print(f"{args.method}: {meta['rows']} rows in {meta['train_seconds']:.2f}s")
    elif args.command == "evaluate":
        print_reports(experiments.cmd_evaluate(config, args.methods or experiments.METHODS, args.regime))
    elif args.command == "size-study":
        results = experiments.cmd_size_study(config, args.sizes)
        outputs = list(results[0][1].outputs) if results else []
        rows = [[size] + [r.mape[o] for o in outputs] for size, r in results]
        print(format_table(["size"] + outputs, rows))
    elif args.command == "transfer":
        print_reports(list(experiments.cmd_transfer(config, args.epochs).values()))
    elif args.command == "report":
        print_reports(experiments.cmd_report(config))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse the arguments, run one command and map failures to exit codes"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        run(args)
    except UsageError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except ConfigError as e:
        logger.error("configuration: %s", e)
        return EXIT_CONFIG
    except CycleNetError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURE
    except OSError as e:
        logger.error("%s", e)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
