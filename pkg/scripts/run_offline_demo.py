#!/usr/bin/env python3
"""Run the full pipeline over the bundled fixture corpus.

Builds the dataset end to end with the mock provider, prints one line per
stage and the paths of the generated report files. The working directory
defaults to ./demo_workdir and is reused across invocations, so a second
run demonstrates the up-to-date checkpoint shortcut.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from factpipe.pipeline import ConfigError, RunConfig, StageFailure, run  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", type=Path, default=ROOT / "demo_workdir")
    parser.add_argument("--fixtures", type=Path, default=ROOT / "fixtures")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    config = RunConfig(workdir=args.workdir, offline=True, fixture_root=args.fixtures)
    try:
        report = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StageFailure as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 1

    for result in report.results:
        print(result.describe())
    reports_dir = args.workdir / "reports"
    print(f"\nreports in {reports_dir}:")
    for path in sorted(reports_dir.iterdir()):
        print(f"  {path.name}")
    print(f"\ncheckpoints in {args.workdir / 'checkpoints'}")
    print(f"provenance sidecars in {args.workdir / 'provenance'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
