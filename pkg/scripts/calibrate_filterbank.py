"""Grid search over Morlet window shapes, reporting the Littlewood-Paley deviation.

The package defaults (bandwidth factor 1.3, slant 1.6, low-pass width 2.5)
came out of this search on the 128x128, J=3, L=4 grid. Without the caps the
deviation keeps falling as the windows widen, but wide wavelets overlap
their dyadic neighbours and a wide low-pass aliases on the 2**J output grid.

    python scripts/calibrate_filterbank.py --size 128 -J 3 -L 4
"""
import argparse
import itertools

import numpy as np

from scatret.filterbank import build_morlet_bank, littlewood_paley


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("-J", type=int, default=3)
    parser.add_argument("-L", type=int, default=4)
    parser.add_argument("--top", type=int, default=10)
    parser.add_argument("--max-bandwidth", type=float, default=1.3)
    parser.add_argument("--max-lowpass", type=float, default=2.5)
    args = parser.parse_args()

    rows = []
    grid = itertools.product(np.arange(0.8, args.max_bandwidth + 1e-9, 0.1), np.arange(1.0, 2.41, 0.2),
                             np.arange(1.5, args.max_lowpass + 1e-9, 0.5))
    for bw, slant, lp in grid:
        bank = build_morlet_bank(args.size, args.size, args.J, args.L, slant=slant, bandwidth_factor=bw,
                                 lowpass_width=lp)
        _, delta = littlewood_paley(bank)
        rows.append((delta, bw, slant, lp, bank.gain))
    rows.sort()
    print(f"{'delta':>8} {'bandwidth':>9} {'slant':>6} {'lowpass':>7} {'gain':>7}")
    for delta, bw, slant, lp, gain in rows[:args.top]:
        print(f"{delta:8.4f} {bw:9.2f} {slant:6.2f} {lp:7.2f} {gain:7.4f}")


if __name__ == "__main__":
    main()
