#!/usr/bin/env python3

"""
Command line front end:

    phase-scope optimize --config scan.json [--noise.p2 0.01 ...]
    phase-scope scan     --config scan.json
    phase-scope analyze  --config scan.json [--level zne]
    phase-scope ed       --config scan.json
    phase-scope selftest

Unrecognized ``--a.b value`` options override config fields by dotted
path. Exit status is 0 on success, 1 when some points were flagged or a
self test failed, and 2 for an invalid configuration.
"""

import argparse
import logging
import sys

from .. import archive, pipeline
from ..config import apply_overrides, load_document, parse_overrides, ScanConfig
from ..exception import ConfigError, PhaseScopeError
from .selftest import run_selftest

logger = logging.getLogger("phasescope")

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_CONFIG = 2


def _setup_logging(verbose, quiet):
    level = logging.WARNING if quiet else (logging.DEBUG if verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)-7s %(name)s: %(message)s")


def _build_parser():
    parser = argparse.ArgumentParser(prog="phase-scope", description="VQE phase diagram scans of the ANNNI chain.",
                                     epilog="""
    Any other --section.field VALUE option overrides that field of the
    configuration, e.g. --noise.p2 0.01 or --model.bx 0.2.""")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging; repeat for debug output.")
    parser.add_argument("--quiet", action="store_true", help="Only warnings and errors.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scan_command(name, text):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, help="JSON scan configuration.")
        p.add_argument("--workers", type=int, default=None, help="Points processed concurrently.")
        return p

    scan_command("optimize", "Optimize the ansatz at every grid point and archive the parameters.")
    p = scan_command("scan", "Execute the archived parameters and summarize the records.")
    p.add_argument("--no-summary", action="store_true", help="Only acquire and archive records.")
    p = scan_command("analyze", "Detect transitions in a summarized run.")
    p.add_argument("--level", default=None,
                   choices=list(pipeline.LEVELS) + list(pipeline.REFERENCE_LEVELS),
                   help="Mitigation level to analyze. Default: the most mitigated one present.")
    p.add_argument("--threshold", type=float, default=5.0, help="Robust outlier threshold.")
    p.add_argument("--resummarize", action="store_true", help="Rebuild results.csv from the records first.")
    p = scan_command("ed", "Dump exact diagonalization references for the grid.")
    p.add_argument("--num-states", type=int, default=None, help="Lowest eigenpairs kept per point.")
    sub.add_parser("selftest", help="Run the built-in invariant checks.")
    return parser


def _load(args, extra):
    data = load_document(args.config) if args.config else {}
    overrides = parse_overrides(extra)
    if args.workers is not None:
        overrides.append(("workers", args.workers))
    return ScanConfig.from_dict(apply_overrides(data, overrides))


def _run(args, config):
    if args.command == "optimize":
        run, results = pipeline.cmd_optimize(config)
        failed = sum(1 for r in results if r.failed)
        print("{0}: {1} of {2} points optimized".format(run.root, len(results) - failed, len(results)))
        return EXIT_FLAGGED if results and failed == len(results) else EXIT_OK

    if args.command == "scan":
        run = pipeline.cmd_scan(config, summarize=not args.no_summary)
        if args.no_summary:
            return EXIT_OK
        _, rows = archive.read_results_csv(run.results_path)
        flagged = [row for row in rows if row.get("status") != "ok"]
        print("{0}: {1} points, {2} flagged".format(run.root, len(rows), len(flagged)))
        return EXIT_FLAGGED if flagged else EXIT_OK

    if args.command == "analyze":
        run = archive.RunDirectory.for_config(config.to_dict(), config.output)
        if args.resummarize:
            pipeline.cmd_summarize(run)
        report = pipeline.cmd_analyze(run, args.level, args.threshold)
        for iv in report["intervals"]:
            print("J2 {0:.4g}..{1:.4g}: {2}".format(iv["lo"], iv["hi"], ",".join(iv["evidence"])))
        for note in report["notes"]:
            print("J2 {0:.4g} {1}: {2}".format(note["j2"], note["kind"], note["message"]))
        return EXIT_OK

    if args.command == "ed":
        rows = pipeline.cmd_ed(config, args.num_states)
        return EXIT_FLAGGED if any(row.get("flags") for row in rows) else EXIT_OK

    raise ValueError("Unknown command " + args.command)


def main(argv=None):
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    _setup_logging(args.verbose, args.quiet)

    if args.command == "selftest":
        if extra:
            parser.error("selftest takes no overrides")
        results = run_selftest()
        for r in results:
            print("{0:4} {1}: {2}".format("ok" if r.passed else "FAIL", r.name, r.detail))
        return EXIT_OK if all(r.passed for r in results) else EXIT_FLAGGED

    try:
        config = _load(args, extra)
    except ConfigError as ex:
        logger.error("%s", ex)
        return EXIT_CONFIG
    try:
        return _run(args, config)
    except PhaseScopeError as ex:
        logger.error("%s", ex)
        return EXIT_FLAGGED


def Main():
    sys.exit(main())


if __name__ == "__main__":
    Main()

# Copyright 2026, phasescope developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
