"""Simulate, reconstruct and score one demo config through the command line.

    python3 scripts/run_demo.py configs/demo_m3.json [--workdir out/]

The phantom defaults to configs/two_disks.txt (the shifted copy for the
half-space). Prints the compare metrics and the wall time of each stage.
"""
import argparse
import json
import sys
import time
from pathlib import Path

from secpat.cli import main as cli

ROOT = Path(__file__).resolve().parent.parent


def run(config: Path, workdir: Path, phantom: Path | None = None) -> dict:
    cfg = json.loads(config.read_text())
    if phantom is None:
        name = "two_disks_halfspace.txt" if cfg.get("domain") == "halfspace" else "two_disks.txt"
        phantom = ROOT / "configs" / name
    workdir.mkdir(parents=True, exist_ok=True)
    stem = workdir / config.stem
    grid = ["--grid-n", str(cfg.get("grid_n", 256))]
    if cfg.get("grid_bbox"):
        grid += ["--grid-bbox", *map(str, cfg["grid_bbox"])]
    steps = [
        ("simulate", ["simulate", "--config", str(config), "--phantom", str(phantom), "-o", f"{stem}_data.csv"]),
        ("reconstruct", ["reconstruct", "--config", str(config), "-m", f"{stem}_data.csv",
                         "--phantom", str(phantom), "-o", f"{stem}_image"]),
        ("rasterize", ["phantom", "rasterize", str(phantom), "--domain", cfg.get("domain", "disk:1.0"),
                       *grid, "-o", f"{stem}_truth.csv"]),
        ("compare", ["compare", f"{stem}_truth.csv", f"{stem}_image.csv"]),
    ]
    timings = {}
    for label, argv in steps:
        t0 = time.perf_counter()
        code = cli(argv)
        timings[label] = time.perf_counter() - t0
        if code:
            raise SystemExit(f"{label} failed with exit code {code}")
    return timings


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config", type=Path)
    p.add_argument("--workdir", type=Path, default=Path("demo_out"))
    p.add_argument("--phantom", type=Path)
    args = p.parse_args(argv)
    timings = run(args.config, args.workdir, args.phantom)
    for label, sec in timings.items():
        print(f"time_{label}={sec:.2f}s")
    print(f"time_total={sum(timings.values()):.2f}s")


if __name__ == "__main__":
    sys.exit(main())
