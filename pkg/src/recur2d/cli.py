"""Command line front end.

One subcommand per experiment kind plus `accept`, which replays the pinned
verification suite.  Every experiment subcommand takes the same flags:

    recur2d <kind> -c config.json --out DIR [--seed N] [--workers N]

The config's `kind` must match the subcommand.  Exit codes: 0 success,
1 acceptance criteria failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigInvalid, Recur2dError
from .harness import KINDS, load_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recur2d",
        description="reproducible recurrence-time experiments on "
                    "lattice extensions of subshifts")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("-c", "--config", required=True,
                       help="JSON experiment config")
        p.add_argument("--out", required=True,
                       help="output directory for artifacts and manifest")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
        p.add_argument("--workers", type=int, default=None,
                       help="override the config's worker count "
                            "(results do not depend on it)")
    acc = sub.add_parser("accept", help="run the pinned verification suite")
    acc.add_argument("-c", "--config", default=None,
                     help="criteria config (default: the packaged one)")
    acc.add_argument("--out", default=None,
                     help="write the per-criterion JSON report here")
    acc.add_argument("--only", default=None,
                     help="comma-separated criterion ids, e.g. 1,5,13")
    return parser


def _run_kind(args) -> int:
    cfg = load_config(args.config)
    if cfg["kind"] != args.command:
        raise ConfigInvalid(
            f"config is for kind {cfg['kind']!r}, not {args.command!r}",
            path="kind")
    manifest = run_experiment(cfg, args.out, seed=args.seed,
                              workers=args.workers)
    print(f"[{manifest.data['kind']}] seed={manifest.data['seed']} "
          f"wall={manifest.data['wall_time_s']}s digest={manifest.digest[:16]}")
    for name in manifest.files:
        print(f"  wrote {Path(args.out) / name}")
    return 0


def _run_accept(args) -> int:
    from .acceptance import load_criteria_config, run_acceptance
    cfg = load_criteria_config(args.config)
    only: Optional[set[int]] = None
    if args.only:
        try:
            only = {int(tok) for tok in args.only.split(",") if tok.strip()}
        except ValueError:
            raise ConfigInvalid("must be comma-separated integers",
                                path="--only")
    report = run_acceptance(cfg, only=only, echo=print)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=1, default=str) + "\n")
        print(f"report: {out}")
    return 0 if all(c["passed"] for c in report["criteria"]) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "accept":
            return _run_accept(args)
        return _run_kind(args)
    except Recur2dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
