"""Command-line entry point: ``ctxgst <command> [--config FILE] ...``.

Exit codes: 0 on success, 2 for configuration errors, 3 when a numerical
result that acceptance depends on could not be obtained.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .datagen import DatasetError, load, store
from .estimator import SensitivityLossError
from .metrics import DiamondSolverError
from .nonmarkov import NonInvertibleMapError

log = logging.getLogger("ctxgst")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--preset", choices=sorted(ex.PRESETS), help="named parameter point used as the base config")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", help="output file (CSV, or JSON for fit and sample)")
    common.add_argument("--mode", choices=["context-dependent", "context-independent"])
    common.add_argument("--threads", type=int, help="worker processes for Monte Carlo commands")
    common.add_argument("--repetitions", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ctxgst", description="Context-aware gate set tomography experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ex.COMMANDS:
        sub.add_parser(name, parents=[common])
    sub.add_parser("sample", parents=[common])
    fit = sub.add_parser("fit", parents=[common])
    fit.add_argument("--data", required=True, help="dataset JSON written by 'sample'")
    return p


def _config(args) -> ex.ExperimentConfig:
    if args.config and args.preset:
        raise ex.ConfigError("give either --config or --preset, not both")
    if args.config:
        config = ex.ExperimentConfig.load(args.config)
    elif args.preset:
        config = ex.preset(args.preset)
    else:
        config = ex.ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "mode", "threads", "repetitions") if getattr(args, k) is not None}
    try:
        return replace(config, **overrides)
    except ValueError as exc:
        raise ex.ConfigError(str(exc)) from exc


def _default_out(config: ex.ExperimentConfig, command: str, suffix: str) -> Path:
    return Path(config.out_dir) / f"{command}-{config.digest()}.{suffix}"


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _config(args)
        if args.command == "sample":
            out = Path(args.out) if args.out else _default_out(config, "sample", "json")
            out.parent.mkdir(parents=True, exist_ok=True)
            store(ex.cmd_sample(config), out)
        elif args.command == "fit":
            try:
                data = load(args.data)
            except (OSError, DatasetError) as exc:
                raise ex.ConfigError(f"cannot load dataset: {exc}") from exc
            res = ex.cmd_fit(config, data)
            text = res.to_json()
            if args.out:
                Path(args.out).write_text(text)
            else:
                print(text)
            out = args.out
            if not res.success:
                log.error("fit did not converge: %s", res.status)
                return EXIT_NUMERICAL
        else:
            rows = ex.COMMANDS[args.command](config)
            out = Path(args.out) if args.out else _default_out(config, args.command, "csv")
            ex.write_csv(rows, config, args.command, out)
        if out:
            log.info("wrote %s", out)
            print(out)
        return EXIT_OK
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ex.NumericalFailure, DiamondSolverError, SensitivityLossError, NonInvertibleMapError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
