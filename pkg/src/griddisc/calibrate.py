"""One-off oracle run that fixes the ball bound's constant c.

For every set of the frozen suite the ratio lhs / (r^(d/2) N^(1/2-1/2d))
is computed at M = even-ceil(C N^(1+1/2d)/r); c is half the minimum ratio.
The result is written to data/calibration.json and then never recomputed
by the library itself.
"""

from __future__ import annotations

import argparse
import json
from importlib import resources
from pathlib import Path

from . import bounds
from .geometry import GridSpec
from .suite import BALL_RADIUS, ball_calibration_suite, torus_suite
from .torus_ball import two_radius_l2

DEFAULT_C = 8

D3_SIZES = [2, 4, 8]
D3_SEEDS = range(5)
D3_RADIUS = 0.15


def ratios(suite, d: int, r: float, C: float):
    for tag, P in suite:
        M = bounds.ball_min_M(P.N, d, r, C)
        lhs = two_radius_l2(P, GridSpec.torus(d, M), r)
        yield tag, P.N, M, lhs / (r ** (d / 2) * P.N ** (0.5 - 1 / (2 * d)))


def calibrate(C: float = DEFAULT_C, with_d3: bool = True) -> dict:
    table = {}
    runs = {}
    suite2 = ball_calibration_suite(2)
    rows = list(ratios(suite2, 2, BALL_RADIUS, C))
    worst = min(rows, key=lambda t: t[3])
    table["2"] = worst[3] / 2
    runs["2"] = {"r": BALL_RADIUS, "sets": len(rows), "argmin": worst[0], "min_ratio": worst[3]}
    if with_d3:
        suite3 = [(f"N{N}-{tag}", P) for N in D3_SIZES for tag, P in torus_suite(N, 3, D3_SEEDS)]
        rows = list(ratios(suite3, 3, D3_RADIUS, C))
        worst = min(rows, key=lambda t: t[3])
        table["3"] = worst[3] / 2
        runs["3"] = {"r": D3_RADIUS, "sets": len(rows), "argmin": worst[0], "min_ratio": worst[3]}
    return {"ball": {"C": C, "c": table, "runs": runs}}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="recompute the frozen ball-bound constant")
    parser.add_argument("--C", type=float, default=DEFAULT_C)
    parser.add_argument("--no-d3", action="store_true")
    parser.add_argument("--write", action="store_true", help="overwrite the packaged calibration file")
    args = parser.parse_args(argv)
    data = calibrate(args.C, not args.no_d3)
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if args.write:
        path = Path(str(resources.files("griddisc").joinpath("data/calibration.json")))
        path.write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
