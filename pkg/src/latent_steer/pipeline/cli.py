"""``latent-steer <mode> --config FILE [--seed N] [--out DIR] [--strict]``"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import MODES, ConfigError, load_config
from .runner import run

EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latent-steer", description="Latent-direction steering toolkit.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("runs", nargs="*", help="compare mode: two run directories (A then B)")
    p.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed manifest line")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, mode=args.mode, seed=args.seed, out=args.out)
        if args.runs:
            if args.mode != "compare" or len(args.runs) != 2:
                raise ConfigError("positional run directories are only accepted as 'compare RUN_A RUN_B'")
            cfg.compare.run_a, cfg.compare.run_b = args.runs
    except (ConfigError, OSError) as exc:
        print(f"latent-steer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    res = run(cfg, strict=args.strict)
    # one delimited block on stdout so scripts can pick the result up
    print("=== latent-steer result ===")
    print(json.dumps({
        "mode": res.mode,
        "out": str(res.out),
        "exit_code": res.exit_code,
        "error": res.error,
        "summary": res.summary,
        "files": sorted(str(p) for p in res.files),
    }, indent=2, sort_keys=True, default=float))
    print("=== end ===")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
