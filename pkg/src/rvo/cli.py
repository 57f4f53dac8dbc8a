"""Command-line entry point: ``rvo <scenario> [--config FILE] [--out-dir DIR] [--threads N]``.

Exit codes: 0 success, 2 configuration error, 3 solver fault.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import SCENARIOS, ConfigError, load_config, parse_config
from .medium import line_table_json
from .scenarios import ScenarioError, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

log = logging.getLogger("rvo")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rvo", description="Rb-vapour cavity OPO simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", help="JSON config; omitted keys take packaged defaults")
        p.add_argument("--out-dir", help="output directory (overrides output_dir)")
        p.add_argument("--threads", type=int, help="worker threads (RVO_THREADS overrides)")
    sub.add_parser("lines", help="print the bundled line table as JSON")
    return ap


def _threads(arg):
    env = os.environ.get("RVO_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("RVO_THREADS", f"expected an integer, got {env!r}") from None
    else:
        value = arg
    if value is not None and value < 1:
        raise ConfigError("threads", "must be >= 1")
    return value


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "lines":
        print(line_table_json())
        return EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else parse_config({})
        cfg = parse_config({**cfg.to_dict(), "scenario": args.command})
        threads = _threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_scenario(cfg, args.out_dir, threads)
    except ScenarioError as exc:
        print(f"solver fault: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = args.out_dir or cfg.output_dir
    for name in manifest["results"].get("files", []):
        print(os.path.join(out, name))
    print(os.path.join(out, f"{cfg.scenario}_manifest.json"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
