"""Command-line entry point: ``fmcwleak run [config] [--preset NAME] ...``.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .scenario import PRESETS, ConfigError, config_from_dict, preset_text, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmcwleak", description="FMCW leakage-locked down-conversion scenarios")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="simulate a scenario and write spectra and a JSON summary")
    run.add_argument("config", nargs="?", help="scenario config (JSON)")
    run.add_argument("--preset", choices=PRESETS, help="use a shipped preset instead of a config file")
    run.add_argument("--technique", choices=("common", "proposed", "both"), help="override techniques")
    run.add_argument("--seed", type=int, help="override the RNG seed")
    run.add_argument("--chirps", type=int, help="override the number of chirps")
    run.add_argument("--freeze-estimate", action="store_true", default=None,
                     help="estimate the leakage tone on the first chirp only and reuse it")
    run.add_argument("--out", help="output directory (default: config output_dir, else ./out/<name>)")
    return parser


def _load(args) -> dict:
    if (args.config is None) == (args.preset is None):
        raise ConfigError(["give exactly one of a config file or --preset"])
    if args.preset:
        text = preset_text(args.preset)
    else:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read {args.config}: {exc.strerror}"]) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError(["config: expected an object"])
    if args.technique:
        doc["techniques"] = ["common", "proposed"] if args.technique == "both" else [args.technique]
    for key, val in (("seed", args.seed), ("n_chirps", args.chirps), ("freeze_estimate", args.freeze_estimate)):
        if val is not None:
            doc[key] = val
    return doc


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        config = config_from_dict(_load(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or config.output_dir or str(Path("out") / config.name)
    try:
        result = run_scenario(config, out)
    except Exception as exc:  # any module failure becomes a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in result.files:
        print(path)
    if not result.summary["validation"]["passed"]:
        print("warning: frequency plan validation failed; see summary.json", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
