"""Retrieval rates of the four method/depth combinations on a texture dataset.

    python scripts/retrieval_table.py /data/textures --json rates.json

The dataset root needs one subdirectory per texture class. With 512x512
source images the default grid patching gives 16 patches per image.
"""
import argparse
import json
import time

from scatret.config import RunConfig
from scatret.retrieval import EvaluationReport, index_dataset

ROWS = [("nwst-weibull", 3), ("nwst-weibull", 2), ("wst-weibull", 2), ("fwt-ggd", 2)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("root")
    parser.add_argument("--patch-size", type=int, default=128)
    parser.add_argument("--patching", choices=("grid", "five", "whole"), default="grid")
    parser.add_argument("--downscale", action="store_true")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--json", help="write all reports to this file")
    args = parser.parse_args()

    reports = []
    for method, M in ROWS:
        cfg = RunConfig(method=method, M=M, patch_size=args.patch_size, patching=args.patching,
                        downscale=args.downscale, workers=args.workers)
        start = time.perf_counter()
        report = EvaluationReport.from_db(index_dataset(args.root, cfg))
        label = f"{method} M={M}" if method != "fwt-ggd" else method
        print(f"{label:<18} {100 * report.overall:6.2f}%   ({report.records} patches, "
              f"{time.perf_counter() - start:.1f} s)", flush=True)
        reports.append({"method": method, "M": M, "report": json.loads(report.to_json())})
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(reports, fh, indent=2)


if __name__ == "__main__":
    main()
