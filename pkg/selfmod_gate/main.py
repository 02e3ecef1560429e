"""selfmod-gate - Main Application"""
import argparse
import asyncio
import sys
from pathlib import Path
from typing import Dict, List, Optional

from config.settings import EXIT_CONFIG, OUTPUT_DIR, QUIET, TOOL_NAME, TOOL_VERSION
from routes.ma import cmd_ma
from routes.mh import cmd_mh
from routes.oracle import cmd_oracle
from routes.substrate import cmd_substrate
from utils.helpers import ConfigError, log, log_error

COMMANDS = {
    "mh": cmd_mh,
    "ma": cmd_ma,
    "substrate": cmd_substrate,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        allow_abbrev=False,
        prog=TOOL_NAME,
        description="Two-Gate self-modification experiments: representational (mh), algorithmic (ma), "
                    "substrate and oracle suites.",
        epilog="Any other configuration key can be given as `--key value` (dashes or underscores).",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("experiment", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--defaults", action="store_true", help="ignore --config and start from the built-in defaults")
    parser.add_argument("--plot", action="store_true", help="also write an SVG plot")
    parser.add_argument("--out", type=Path, default=OUTPUT_DIR, help="output directory (default $SELFMOD_OUT or results)")
    parser.add_argument("--seeds", help="seed count N (base_seed..base_seed+N-1) or a comma-separated list")
    return parser


def parse_overrides(tokens: List[str]) -> Dict[str, str]:
    """`--key value` pairs; a flag followed by another flag (or nothing) means true"""
    overrides: Dict[str, str] = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(token, "expected a --key option")
        key, _, inline = token[2:].partition("=")
        if inline:
            overrides[key] = inline
            i += 1
        elif i + 1 < len(tokens) and not tokens[i + 1].startswith("--"):
            overrides[key] = tokens[i + 1]
            i += 2
        else:
            overrides[key] = "true"
            i += 1
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args, extra = build_parser().parse_known_args(argv)
    try:
        overrides = parse_overrides(extra)
    except ConfigError as e:
        log_error(f"✗ config error: {e}")
        return EXIT_CONFIG
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.defaults and args.config is not None:
        log(f"⚠️  --defaults given, ignoring {args.config}")

    banner = not QUIET
    if banner:
        print("\n" + "=" * 60)
    log(f"🚀 {TOOL_NAME} {TOOL_VERSION}: {args.experiment}")
    code = asyncio.run(COMMANDS[args.experiment](
        config_path=None if args.defaults else args.config,
        overrides=overrides,
        out_dir=args.out,
        plot=args.plot,
    ))
    log(f"{'✓' if code == 0 else '✗'} {args.experiment} finished with exit code {code}")
    if banner:
        print("=" * 60 + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
