"""Regenerate every result table as CSV under an output directory.

    python3 scripts/run_all.py --out results            # full Monte Carlo, ~20 min on one core
    python3 scripts/run_all.py --out results --quick    # 10 repetitions, for a smoke run
"""
import argparse
import logging
import time
from pathlib import Path

from ctxgst import experiments as ex

log = logging.getLogger("run_all")


def jobs(quick: bool):
    reps = {"repetitions": 10} if quick else {}
    yield "amplification", ex.ExperimentConfig(depths=(60,))
    yield "trajectory", ex.ExperimentConfig(depths=(60,))
    yield "nonmarkov", ex.preset("nonmarkov")
    yield "fisher", ex.preset("thermal")
    for scheme in ("log-spaced", "last-depth"):
        yield "scan-depth", ex.ExperimentConfig(scheme=scheme, **reps)
    yield "param-scaling", ex.preset("thermal", **reps)
    yield "context-compare", ex.preset("context", **reps)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    out = Path(args.out)
    for command, config in jobs(args.quick):
        config = ex.replace(config, threads=args.threads)
        start = time.perf_counter()
        rows = ex.COMMANDS[command](config)
        path = out / f"{command}-{config.scheme}-{config.digest()}.csv"
        ex.write_csv(rows, config, command, path)
        log.info("%s -> %s (%.0f s)", command, path, time.perf_counter() - start)


if __name__ == "__main__":
    main()
