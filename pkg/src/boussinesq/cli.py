"""Command-line entry point ``bsq``.

    bsq run --config run.cfg [--out DIR]
    bsq scenario NAME --config run.cfg [--out DIR]
    bsq resume --checkpoint state.bsq --config run.cfg [--out DIR]

Exit status: 0 when no check was breached, 1 on breaches, 2 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .checkpoint import load_checkpoint
from .config import SCENARIOS, parse_config
from .errors import CheckpointError, ConfigError
from .scenarios import resume_run, run_scenario


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bsq", description="Dissipative Boussinesq experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenario named in the config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default="bsq_out")

    sc = sub.add_parser("scenario", help="run a named scenario")
    sc.add_argument("name", choices=SCENARIOS)
    sc.add_argument("--config", required=True)
    sc.add_argument("--out", default=None, help="default: bsq_out/<name>")

    rs = sub.add_parser("resume", help="continue a checkpointed run up to t_end")
    rs.add_argument("--checkpoint", required=True)
    rs.add_argument("--config", required=True)
    rs.add_argument("--out", default="bsq_out/resume")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"scenario": args.name} if args.command == "scenario" else None
    try:
        cfg = parse_config(args.config, overrides=overrides)
        if args.command == "resume":
            state, f = load_checkpoint(args.checkpoint)
            outcome = resume_run(state, f, cfg, args.out)
        else:
            out = args.out or f"bsq_out/{cfg.scenario}"
            outcome = run_scenario(cfg.scenario, cfg, out)
    except (ConfigError, CheckpointError, OSError) as exc:
        print(f"bsq: error: {exc}", file=sys.stderr)
        return 2
    for b in outcome.breaches:
        print(f"bsq: breach: {b}", file=sys.stderr)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
