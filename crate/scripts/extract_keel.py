#!/usr/bin/env python3
"""Extract the benchmark datasets bundled in the `keel-ds` wheel into data/*.csv.

Usage: pip download --no-deps keel-ds && python3 scripts/extract_keel.py keel_ds-*.whl
"""
import sys
import zipfile
from pathlib import Path

DATASETS = {
    "australian": "australian",
    "german": "german",
    "heart": "heart",
    "ionosphere": "ionosphere",
    "sonar": "sonar",
    "wdbc": "wdbc",
}


def main() -> None:
    wheel = zipfile.ZipFile(sys.argv[1])
    out = Path(__file__).resolve().parent.parent / "data"
    out.mkdir(exist_ok=True)
    for name, member in DATASETS.items():
        raw = wheel.read(f"keel_ds/data/balanced/raw/{member}.dat").decode()
        rows = [[c.strip() for c in line.split(",")] for line in raw.splitlines() if line.strip()]
        width = len(rows[0]) - 1
        header = [f"f{i + 1}" for i in range(width)] + ["class"]
        with open(out / f"{name}.csv", "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
        print(f"{name}: {len(rows)} records, {width} features")


if __name__ == "__main__":
    main()
