"""Command-line entry point: ``dynsplit {train,oracle,sweep,report}``."""

from __future__ import annotations

import argparse
import functools
import logging
import os
import sys
from pathlib import Path

from ..core.config import ConfigError, ExperimentConfig, load_config
from ..orchestrator.client import RoundError
from ..orchestrator.runner import TRANSPORTS, run_training
from ..proto.codec import ProtocolError
from ..proto.transport import TransportError
from ..splitnet.network import SplitNetError, corrupted_backward
from . import oracle, report, sweep
from .rundir import summarize, write_run_directory

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_IO = 4

OUT_ENV = "REINDSPLIT_OUT"
DEFAULT_OUT_ROOT = "runs"

log = logging.getLogger("dynsplit")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_u64, help="experiment seed (overrides the config)")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a config field, dotted keys for nested fields; repeatable")
    p.add_argument("--transport", choices=TRANSPORTS, default="loopback")
    p.add_argument("--listen", default="127.0.0.1:0", metavar="ADDR",
                   help="stream mode: address the parameter server binds")
    p.add_argument("--connect", metavar="ADDR", help="stream mode: address devices dial (defaults to --listen)")
    p.add_argument("--workers", type=_positive, default=1, help="threads for concurrent device work")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynsplit", description="Dynamic split-learning experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-episode progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one experiment and write a run directory")
    p.add_argument("--config", type=Path, help="YAML config (defaults when omitted)")
    p.add_argument("--out", type=Path, help=f"run directory (default ${OUT_ENV}/run-<hash>)")
    _add_run_flags(p)

    p = sub.add_parser("oracle", help="run the self-verification suite")
    p.add_argument("--mutate-backward", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("sweep", help="grid sweep over optimisation hyperparameters")
    p.add_argument("grid", type=Path, help="YAML file with optional 'base' and a 'grid' mapping")
    p.add_argument("--out", type=Path, help=f"output directory for sweep.csv (default ${OUT_ENV})")
    _add_run_flags(p)

    p = sub.add_parser("report", help="aggregate a run directory into report.json")
    p.add_argument("run_dir", type=Path)
    return parser


def _out_root() -> Path:
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT_ROOT)


def _overrides(args: argparse.Namespace) -> list[str]:
    extra = [] if args.seed is None else [f"seed={args.seed}"]
    return [*args.override, *extra]


def _runner(args: argparse.Namespace):
    return functools.partial(run_training, transport=args.transport, workers=args.workers,
                             listen=args.listen, connect=args.connect)


def cmd_train(args: argparse.Namespace) -> int:
    cfg: ExperimentConfig = load_config(args.config, _overrides(args))
    art = _runner(args)(cfg)
    out = args.out or _out_root() / f"run-{cfg.config_hash()}"
    write_run_directory(art, out)
    s = summarize(art)
    print(f"run directory: {out}")
    print(f"test accuracy {s['final_accuracy']:.4f}, straggler rate {s['straggler_rate']:.4f}, "
          f"mean reward {s['mean_reward']:.4f}, wall time {art.wall_time:.1f}s")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    if args.mutate_backward:
        with corrupted_backward():
            results = oracle.run_checks()
    else:
        results = oracle.run_checks()
    print(oracle.format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    base, grid = sweep.load_grid(args.grid)
    configs = sweep.expand_grid(base, grid, _overrides(args))
    rows = sweep.run_sweep(configs, _runner(args))
    out = args.out or _out_root()
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    path.write_text(sweep.sweep_csv(rows), encoding="utf-8")
    print(f"{len(rows)} trials written to {path}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    path = report.write_report(args.run_dir)
    print(f"report written to {path}")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "oracle": cmd_oracle, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RoundError, TransportError, ProtocolError, SplitNetError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
