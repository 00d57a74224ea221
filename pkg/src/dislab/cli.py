"""Command-line entry point.

Subcommands mirror the harness modes::

    dislab theory         --config cfg.json --out curves.csv
    dislab simulate       --config cfg.json --out curves.csv [--seed S] [--threads T]
    dislab compare        --config cfg.json --out report.json [--seed S] [--threads T]
    dislab estimate-slope --config cfg.json --out slope.json
    dislab dataset        --config cfg.json --out curves.csv [--seed S]

``--seed`` overrides the seed stored in the config; ``--threads`` (or the
``DISLAB_THREADS`` environment variable) sets how many trials run
concurrently.  Exit status: 0 on success, 2 on config validation errors
(the message names the offending field), 1 on any other failure.
"""

import argparse
import sys

from . import harness


def _add_common(sub, seed=False, threads=False):
    sub.add_argument("--config", required=True, help="path to the JSON config")
    sub.add_argument("--out", help="output path (falls back to config 'output')")
    if seed:
        sub.add_argument("--seed", type=int, help="override the config seed")
    if threads:
        sub.add_argument("--threads", type=int, help="concurrent trials (default 1 or DISLAB_THREADS)")


def build_parser():
    parser = argparse.ArgumentParser(prog="dislab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="mode", required=True)
    _add_common(subs.add_parser("theory", help="closed-form sweep"))
    _add_common(subs.add_parser("simulate", help="Monte Carlo sweep"), seed=True, threads=True)
    _add_common(subs.add_parser("compare", help="theory vs simulation"), seed=True, threads=True)
    _add_common(subs.add_parser("estimate-slope", help="slope from sample matrices"))
    _add_common(subs.add_parser("dataset", help="curves from feature files"), seed=True)
    return parser


def _resolve_out(args, cfg):
    out = args.out or cfg.get("output")
    if not out:
        raise harness.ConfigError("output", "missing (pass --out or set 'output')")
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config)
        mode = cfg.get("mode", args.mode)
        if mode != args.mode:
            raise harness.ConfigError(
                "mode", f"config says {mode!r} but subcommand is {args.mode!r}"
            )
        out = _resolve_out(args, cfg)
        if args.mode == "theory":
            outputs = harness.run_theory(cfg, out)
        elif args.mode == "simulate":
            outputs = harness.run_simulate(
                cfg, out, seed_override=args.seed, threads=args.threads
            )
        elif args.mode == "compare":
            outputs = harness.run_compare(
                cfg, out, seed_override=args.seed, threads=args.threads
            )
        elif args.mode == "estimate-slope":
            outputs = harness.run_estimate_slope(cfg, out)
        else:
            outputs = harness.run_dataset(cfg, out, seed_override=args.seed)
    except harness.ConfigError as err:
        print(f"dislab: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"dislab: error: {err}", file=sys.stderr)
        return 1
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
