#!/usr/bin/env python3
"""
Main entry point for the viscous detonation stability toolkit.

Subcommands znd, profile, evans, roots, track, boundary, fit and delay run
one computation and write CSV files plus a JSON manifest; `serve` starts the
local MCP tool server over stdio.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .cli.runner import SUBCOMMANDS, run
from .config import Config, logger
from .errors import DetonationEvansError


def _pair(raw: str) -> List[float]:
    values = [float(part) for part in raw.split(",") if part.strip()]
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {raw!r}")
    return values


def _triple(raw: str) -> List[float]:
    values = [float(part) for part in raw.split(",") if part.strip()]
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected 'x,re,im', got {raw!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detonation-evans",
        description="Spectral stability of viscous strong detonations by the Evans function.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {Config.TOOL_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, metavar="PATH", help="YAML config or a previous manifest")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    common.add_argument("--jobs", type=int, default=None, metavar="N")
    common.add_argument("--out", default=None, metavar="DIR")
    common.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    for name in SUBCOMMANDS:
        sub = subparsers.add_parser(name, parents=[common])
        if name == "evans":
            sub.add_argument("--lambda", dest="lam", type=_pair, default=None, metavar="RE,IM")
            sub.add_argument("--dump-G", dest="dump_G", type=_triple, action="append", default=[], metavar="X,RE,IM")
        if name == "boundary":
            sub.add_argument("--nu", type=float, action="append", default=[], help="viscosity column (repeatable)")
        if name in ("fit", "delay"):
            sub.add_argument("--tabulated", action="store_true", help="use the shipped reference boundary tables")
            sub.add_argument("--points", default=None, metavar="CSV", help="boundary CSV of a previous run")
        if name == "delay":
            sub.add_argument("--e-star", dest="e_star", type=float, default=None)

    serve = subparsers.add_parser("serve", help="Run the MCP tool server over stdio")
    serve.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def flag_overrides(args: argparse.Namespace) -> List[str]:
    """Translate subcommand flags into config overrides so the manifest records them."""
    overrides = list(args.overrides)
    if getattr(args, "lam", None) is not None:
        overrides.append(f"evans.lambda=[{args.lam[0]!r}, {args.lam[1]!r}]")
    if getattr(args, "dump_G", None):
        entries = ", ".join(f"[{x!r}, {re!r}, {im!r}]" for x, re, im in args.dump_G)
        overrides.append(f"evans.dump_G=[{entries}]")
    if getattr(args, "nu", None):
        overrides.append(f"sweep.nu_values=[{', '.join(repr(nu) for nu in args.nu)}]")
    if getattr(args, "tabulated", False):
        overrides.append("sweep.tabulated=true")
    if getattr(args, "points", None):
        overrides.append(f"sweep.boundary_csv={args.points}")
    if getattr(args, "e_star", None) is not None:
        overrides.append(f"sweep.E_star={args.e_star!r}")
    return overrides


def main(argv: Optional[List[str]] = None):
    """Main entry point."""
    args = build_parser().parse_args(argv)
    # stderr keeps stdout free for the stdio transport
    logging.basicConfig(
        level=args.log_level or Config.log_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "serve":
            from .tools import mcp

            logger.info("Starting MCP server via stdio...")
            mcp.run()
            return

        manifest = run(
            args.command,
            config_path=Path(args.config) if args.config else None,
            overrides=flag_overrides(args),
            jobs=args.jobs,
            out_dir=Path(args.out) if args.out else None,
        )
        logger.info(f"Manifest written to {manifest}")

    except DetonationEvansError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        sys.exit(130)
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
