from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .launch import EXIT_CONFIG, EXIT_OK, build, dry_run, launch


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spk", description="Config-driven self-supervised pretraining")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("fit", "train from a config"), ("validate", "build everything without training")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config")
        p.add_argument("overrides", nargs="*", help="dotted.key=value")
        p.add_argument("--run-dir")
        p.add_argument("--seed", type=int)
        if name == "fit":
            p.add_argument("--resume", choices=("auto", "never", "must"))
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = _parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.run_dir is not None:
        overrides.append(f"run_dir={args.run_dir}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        try:
            dry_run(build(cfg))
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"config ok: {args.config}")
        return EXIT_OK

    resume = args.resume or os.environ.get("SPK_RESUME")
    return launch(cfg, resume)


if __name__ == "__main__":
    sys.exit(main())
