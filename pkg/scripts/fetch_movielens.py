#!/usr/bin/env python3
"""Download and unpack a MovieLens dataset for use with the audit pipeline.

The library itself never downloads data; this helper fetches an official
GroupLens archive and leaves ``ratings.csv`` and ``movies.csv`` where the
CLI and demos look for them (``data/movielens`` by default, overridable via
the RANKAUDIT_MOVIELENS environment variable).

Usage:
    python scripts/fetch_movielens.py [--variant ml-latest-small] [--dest data/movielens]

Variants: ml-latest-small (~1 MB, default), ml-latest, ml-25m.
"""

from __future__ import annotations

import argparse
import io
import shutil
import sys
import urllib.request
import zipfile
from pathlib import Path

BASE_URL = "https://files.grouplens.org/datasets/movielens"
VARIANTS = ("ml-latest-small", "ml-latest", "ml-25m")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--variant", choices=VARIANTS, default="ml-latest-small")
    parser.add_argument("--dest", type=Path, default=Path("data/movielens"))
    args = parser.parse_args(argv)

    url = f"{BASE_URL}/{args.variant}.zip"
    print(f"downloading {url} ...")
    with urllib.request.urlopen(url) as response:
        payload = response.read()
    print(f"fetched {len(payload) / 1e6:.1f} MB; unpacking ...")

    args.dest.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        for name in archive.namelist():
            leaf = Path(name).name
            if leaf in ("ratings.csv", "movies.csv"):
                with archive.open(name) as src, open(args.dest / leaf, "wb") as dst:
                    shutil.copyfileobj(src, dst)
    for leaf in ("ratings.csv", "movies.csv"):
        path = args.dest / leaf
        if not path.exists():
            print(f"error: {leaf} missing from the archive", file=sys.stderr)
            return 1
        print(f"  wrote {path} ({path.stat().st_size / 1e6:.1f} MB)")
    print("done; the audit CLI can now be pointed at these files, e.g.")
    print(f"  rankaudit audit --ratings {args.dest}/ratings.csv "
          f"--movies {args.dest}/movies.csv --group Documentary --out report.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
