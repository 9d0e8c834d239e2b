"""Command line: ``bmjet {eval,verify,geodesic} [--config PATH] [--out PATH] [--seed N] [--samples N]``.

Exit status: 0 when everything passes, 1 when a verification check fails,
2 for configuration, expression or domain errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, DomainError, ExpressionError, ParseError
from .runner import DEFAULT_CONFIG, RunConfig, run_eval, run_geodesic, run_verify

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(prog="bmjet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("eval", "closed-form objects at the configured points"),
        ("verify", "invariant and oracle checks over seeded random points"),
        ("geodesic", "integrate the configured Euler-Lagrange curve"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration (defaults if omitted)")
        p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, help="override verify.seed")
        p.add_argument("--samples", type=int, help="override verify.samples")
    return parser


def _load(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    verify = dict(raw.get("verify") or DEFAULT_CONFIG["verify"])
    if args.seed is not None:
        verify["seed"] = args.seed
    if args.samples is not None:
        verify["samples"] = args.samples
    raw = dict(raw, verify=verify)
    return RunConfig.from_dict(raw)


def _error_record(exc):
    rec = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        rec["offset"] = exc.offset
    return rec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = _load(args)
        runner = {"eval": run_eval, "verify": run_verify, "geodesic": run_geodesic}[args.command]
        report = runner(rc)
    except (ConfigError, ExpressionError, DomainError) as exc:
        print(json.dumps(_error_record(exc), sort_keys=True), file=sys.stderr)
        return EXIT_CONFIG_ERROR

    text = report.to_json()
    out = args.out or rc.output
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if report.errors:
        return EXIT_CONFIG_ERROR
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
