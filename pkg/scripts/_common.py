"""Shared helpers for the experiment scripts."""

import argparse
import csv
import dataclasses
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
RESULTS = ROOT / "results"


def parse_config(cls, description: str):
    """Build a dataclass config from ``--field value`` flags, one per field."""
    ap = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cls):
        default = f.default
        if isinstance(default, tuple):
            ap.add_argument(f"--{f.name.replace('_', '-')}", nargs="+", type=type(default[0]), default=default)
        elif isinstance(default, bool):
            ap.add_argument(f"--{f.name.replace('_', '-')}", action=argparse.BooleanOptionalAction, default=default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    ns = ap.parse_args()
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in vars(ns).items()})


def write_csv(name: str, header, rows) -> Path:
    RESULTS.mkdir(exist_ok=True)
    path = RESULTS / name
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path
