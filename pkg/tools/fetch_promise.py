#!/usr/bin/env python3
"""Fetch the nine PROMISE project tables used by the comparison runs.

Downloads <project>-<version>.csv files into data/promise/ (or the
directory given with --dest) from a GitHub mirror of the PROMISE bug-data
collection.  Needs outbound network access; on restricted machines, copy
the CSVs into the destination directory by hand instead.  The expected
tables carry the 20 static code metrics plus a ``bug`` column, one row per
file, named like ``ant-1.6.csv``.
"""

import argparse
import sys
import urllib.error
import urllib.request
from pathlib import Path

MIRRORS = [
    "https://raw.githubusercontent.com/feiwww/PROMISE-backup/master/bug-data/{project}/{project}-{version}.csv",
    "https://raw.githubusercontent.com/opensciences/opensciences.github.io/master/repo/defect/ck/{project}-{version}.csv",
]

PROJECTS = {
    "ant": ["1.3", "1.4", "1.5", "1.6", "1.7"],
    "camel": ["1.0", "1.2", "1.4", "1.6"],
    "jedit": ["3.2", "4.0", "4.1", "4.2", "4.3"],
    "log4j": ["1.0", "1.1", "1.2"],
    "lucene": ["2.0", "2.2", "2.4"],
    "poi": ["1.5", "2.0", "2.5", "3.0"],
    "velocity": ["1.4", "1.5", "1.6"],
    "xalan": ["2.4", "2.5", "2.6"],
    "xerces": ["init", "1.2", "1.3", "1.4"],
}


def fetch_one(project: str, version: str, dest: Path) -> bool:
    target = dest / f"{project}-{version}.csv"
    if target.exists():
        print(f"have     {target.name}")
        return True
    for template in MIRRORS:
        url = template.format(project=project, version=version)
        try:
            with urllib.request.urlopen(url, timeout=30) as response:
                data = response.read()
        except (urllib.error.URLError, OSError) as exc:
            print(f"  miss   {url} ({exc})")
            continue
        target.write_bytes(data)
        print(f"fetched  {target.name} ({len(data)} bytes)")
        return True
    return False


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "data" / "promise",
    )
    args = parser.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)
    failures = []
    for project, versions in PROJECTS.items():
        for version in versions:
            if not fetch_one(project, version, args.dest):
                failures.append(f"{project}-{version}")
    if failures:
        print(f"failed to fetch: {', '.join(failures)}", file=sys.stderr)
        return 1
    print(f"all tables available under {args.dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
