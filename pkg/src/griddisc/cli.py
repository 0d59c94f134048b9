"""Command-line front end: griddisc {gen,corner,cube,ball,verify,identity,sweep}.

Exit codes: 0 success, 1 a bound verdict failed, 2 invalid configuration,
3 an identity suite failed.  Output files default to $GRIDDISC_OUTPUT_DIR
when it is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds
from .errors import GridDiscError
from .geometry import (
    CORNER,
    TOROIDAL,
    GridSpec,
    PointSet,
    dumps_points,
    gen_hammersley,
    gen_lattice,
    gen_uniform_random,
    gen_van_der_corput,
    loads_points,
    snap_corner,
)

OUTPUT_ENV = "GRIDDISC_OUTPUT_DIR"
POINTS_FILE = "points.csv"


@dataclass
class RunConfig:
    command: str
    points: str | None = None
    gen: str | None = None
    lattice: int | None = None
    d: int | None = None
    n: int | None = None
    b: int = 2
    tau: int = 1
    nu: int | None = None
    m: int | None = None
    r: float | None = None
    eps: float | None = None
    kappa: float | None = None
    seed: int = 0
    mode: str | None = None
    out: str | None = None
    theorem: str | None = None
    suite: str | None = None
    method: str | None = None
    ns: str | None = None
    seeds: int = 1
    field_csv: str | None = None
    spectral_csv: str | None = None
    threads: int = 1
    cap: int | None = None
    tol: float | None = None


class ConfigError(GridDiscError):
    pass


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _output_path(name: str | None, default: str) -> Path | None:
    if name == "-":
        return None
    if name:
        return Path(name)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) / default if base else None


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _write_csv(path: str, header, rows) -> None:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# point sources ---------------------------------------------------------------------

def generate(cfg: RunConfig, mode: str) -> PointSet:
    kind = "lattice" if cfg.lattice is not None else cfg.gen
    if kind == "lattice":
        K = cfg.lattice if cfg.lattice is not None else cfg.n
        if K is None or cfg.d is None:
            raise ConfigError("lattice generation needs --lattice K (or --n K) and --d")
        return gen_lattice(K, cfg.d, mode)
    if cfg.n is None or cfg.n < 1:
        raise ConfigError("generation needs --n >= 1")
    if kind == "random":
        if cfg.d is None:
            raise ConfigError("random generation needs --d")
        return gen_uniform_random(cfg.n, cfg.d, cfg.seed, mode)
    if kind == "vdc":
        return gen_van_der_corput(cfg.b, cfg.n, mode)
    if kind == "hammersley":
        return gen_hammersley(cfg.b, cfg.n, mode)
    raise ConfigError(f"unknown generator {kind!r}")


def load_points(cfg: RunConfig, mode: str) -> PointSet:
    """Points from --gen/--lattice, --points FILE ('-' for stdin), or $GRIDDISC_OUTPUT_DIR/points.csv."""
    if cfg.gen or cfg.lattice is not None:
        return generate(cfg, mode)
    if cfg.points == "-" or (cfg.points is None and not os.environ.get(OUTPUT_ENV)):
        P = loads_points(sys.stdin.read())
    else:
        path = Path(cfg.points) if cfg.points else Path(os.environ[OUTPUT_ENV]) / POINTS_FILE
        if not path.exists():
            raise ConfigError(f"point file {path} not found")
        P = loads_points(path.read_text(encoding="utf-8"))
    if cfg.d is not None and P.d != cfg.d:
        raise ConfigError(f"point file has d={P.d}, but --d {cfg.d} was given")
    return P.with_mode(mode)


# commands --------------------------------------------------------------------------

def cmd_gen(cfg: RunConfig) -> int:
    mode = cfg.mode or CORNER
    P = generate(cfg, mode)
    _emit(dumps_points(P), _output_path(cfg.out, POINTS_FILE))
    return 0


def _corner_grid(cfg: RunConfig, P: PointSet) -> GridSpec:
    kw = {} if cfg.cap is None else {"cap": cfg.cap}
    if cfg.m is not None:
        return GridSpec.corner(P.d, cfg.m, **kw)
    return GridSpec.for_points(P.N, P.d, cfg.b, cfg.tau, **kw)


def cmd_corner(cfg: RunConfig) -> int:
    from .corner import CornerDiscrepancyField

    P = load_points(cfg, CORNER)
    grid = _corner_grid(cfg, P)
    field = CornerDiscrepancyField(grid, P)
    norms = field.norms()
    result = {
        "N": P.N, "d": P.d, "M": grid.M,
        "l2_sq": _fmt(norms.l2_sq), "l2": norms.l2,
        "linf": _fmt(norms.linf), "argmax": list(norms.argmax),
    }
    if cfg.field_csv:
        cols = [f"j{i + 1}" for i in range(P.d)] + ["count", "discrepancy"]
        _write_csv(cfg.field_csv, cols, field.rows())
    _emit(_json(result), _output_path(cfg.out, "corner.json"))
    return 0


def cmd_cube(cfg: RunConfig) -> int:
    from .spectral import exp_sums, radius_weight_table
    from .torus_cube import CubeDiscrepancyEnsemble, ensemble_l2_direct, spectral_l2

    P = load_points(cfg, TOROIDAL)
    M = cfg.m if cfg.m is not None else bounds.halasz_min_M(P.N, P.d)
    grid = GridSpec.torus(P.d, M, **({} if cfg.cap is None else {"cap": cfg.cap}))
    grid.check_cap()
    table = exp_sums(snap_corner(P, grid))
    if cfg.method == "direct":
        l2_sq = ensemble_l2_direct(P, grid)
        result = {"l2_sq": _fmt(l2_sq), "l2": math.sqrt(l2_sq)}
    else:
        l2_sq = spectral_l2(table)
        result = {"l2_sq": l2_sq, "l2": math.sqrt(l2_sq)}
    result.update({"N": P.N, "d": P.d, "M": M, "method": cfg.method})
    if cfg.field_csv:
        cols = [f"j{i + 1}" for i in range(P.d)] + ["s", "discrepancy"]
        _write_csv(cfg.field_csv, cols, CubeDiscrepancyEnsemble(grid, P).rows())
    if cfg.spectral_csv:
        cols = [f"k{i + 1}" for i in range(P.d)] + ["re_w", "im_w", "radius_weight"]
        weights = radius_weight_table(M, P.d)
        rows = (row + (float(weights[tuple(int(v) % M for v in row[: P.d])]),) for row in table.rows())
        _write_csv(cfg.spectral_csv, cols, rows)
    _emit(_json(result), _output_path(cfg.out, "cube.json"))
    return 0


def cmd_ball(cfg: RunConfig) -> int:
    from .torus_ball import BallDiscrepancyEnsemble

    P = load_points(cfg, TOROIDAL)
    if cfg.r is None:
        raise ConfigError("ball needs --r")
    M = cfg.m if cfg.m is not None else bounds.ball_min_M(P.N, P.d, cfg.r)
    grid = GridSpec.torus(P.d, M, **({} if cfg.cap is None else {"cap": cfg.cap}))
    ens = BallDiscrepancyEnsemble(grid, P, cfg.r)
    l2_sq = ens.l2_sq()
    result = {"N": P.N, "d": P.d, "M": M, "r": cfg.r, "l2_sq": l2_sq, "l2": math.sqrt(l2_sq)}
    if cfg.field_csv:
        cols = [f"j{i + 1}" for i in range(P.d)] + ["d_r", "d_2r"]
        _write_csv(cfg.field_csv, cols, ens.rows())
    _emit(_json(result), _output_path(cfg.out, "ball.json"))
    return 0


def run_verify(cfg: RunConfig, P: PointSet, tag: str | None = None):
    meta = {"seed": cfg.seed if cfg.gen == "random" else None, "tag": tag or cfg.gen or "file"}
    th = cfg.theorem
    if th == "1":
        from .corner import theorem1_verify

        return theorem1_verify(P.with_mode(CORNER), cfg.b, cfg.tau, **meta)
    if th == "1-linf":
        from .corner import theorem1_linf_verify

        return theorem1_linf_verify(P.with_mode(CORNER), cfg.b, cfg.tau, cfg.kappa, **meta)
    if th == "2":
        from .torus_cube import theorem2_verify

        return theorem2_verify(P.with_mode(TOROIDAL), cfg.m, cfg.method or "spectral", **meta)
    if th == "3":
        from .torus_ball import theorem3_verify

        if cfg.r is None:
            raise ConfigError("theorem 3 needs --r")
        return theorem3_verify(P.with_mode(TOROIDAL), cfg.r, cfg.m, method=cfg.method or "direct", **meta)
    raise ConfigError(f"unknown theorem {th!r}; choose 1, 1-linf, 2 or 3")


def cmd_verify(cfg: RunConfig) -> int:
    mode = CORNER if cfg.theorem in ("1", "1-linf") else TOROIDAL
    P = load_points(cfg, mode)
    report = run_verify(cfg, P)
    report.extra["threads"] = cfg.threads
    _emit(report.to_json(indent=2) + "\n", _output_path(cfg.out, "report.json"))
    return 0 if report.verdict in ("pass", "suppressed") else 1


def _identity_haar(cfg: RunConfig) -> list[str]:
    from .corner import box_occupancy, level_coefficients
    from .haar import HaarIndexSet

    failures = []
    d = cfg.d or 2
    nu = cfg.nu or 4
    b = cfg.b
    grid = GridSpec.badic(d, b, nu, cfg.tau)
    rng = np.random.default_rng(cfg.seed)
    for trial in range(cfg.seeds):
        N = int(rng.integers(b ** (nu - 2), b ** (nu - 1)))
        P = gen_uniform_random(N, d, int(rng.integers(2**31)))
        target = Fraction(-N, b ** (2 * d + 2 * nu))
        for r in HaarIndexSet(nu, d):
            nums, den = level_coefficients(P, r, grid)
            free = ~box_occupancy(P, b, r)
            for c in nums[free].tolist():
                if Fraction(int(c), den) != target:
                    failures.append(f"haar trial={trial} r={r}")
                    break
    return failures


def _identity_plancherel(cfg: RunConfig) -> list[str]:
    from .torus_cube import ensemble_l2_direct, ensemble_l2_spectral

    failures = []
    d = cfg.d or 2
    M = cfg.m or 32
    tol = cfg.tol or 1e-9
    for s in range(cfg.seeds):
        P = gen_uniform_random(cfg.n or 10, d, cfg.seed + s, TOROIDAL)
        g = GridSpec.torus(d, M)
        a = float(ensemble_l2_direct(P, g))
        b = ensemble_l2_spectral(P, g)
        if abs(a - b) > tol * abs(a):
            failures.append(f"cube identity seed={cfg.seed + s}: {a} vs {b}")
    return failures


def _identity_ball(cfg: RunConfig) -> list[str]:
    from .torus_ball import ball_fourier_identity_check

    failures = []
    d = cfg.d or 2
    M = cfg.m or 32
    r = cfg.r or 0.2
    tol = cfg.tol or 1e-8
    for s in range(cfg.seeds):
        P = gen_uniform_random(cfg.n or 5, d, cfg.seed + s, TOROIDAL)
        err = ball_fourier_identity_check(P, GridSpec.torus(d, M), r)
        if err > tol:
            failures.append(f"ball identity seed={cfg.seed + s}: error {err}")
    return failures


SUITES = {"haar": _identity_haar, "plancherel": _identity_plancherel, "ball": _identity_ball}


def cmd_identity(cfg: RunConfig) -> int:
    names = list(SUITES) if cfg.suite in (None, "all") else [cfg.suite]
    report = {}
    code = 0
    for name in names:
        if name not in SUITES:
            raise ConfigError(f"unknown identity suite {name!r}")
        failures = SUITES[name](cfg)
        report[name] = {"passed": not failures, "failures": failures}
        if failures:
            code = 3
    _emit(_json(report), _output_path(cfg.out, "identity.json"))
    return code


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.ns:
        raise ConfigError("sweep needs --ns, e.g. --ns 4,8,16")
    try:
        Ns = [int(v) for v in cfg.ns.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --ns list {cfg.ns!r}") from exc
    if cfg.d is None:
        raise ConfigError("sweep needs --d")
    mode = CORNER if cfg.theorem in ("1", "1-linf") else TOROIDAL
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theorem", "N", "d", "M", "seed", "lhs", "rhs", "margin", "verdict"])
    for N in Ns:
        for s in range(cfg.seeds):
            sub = RunConfig(**{**asdict(cfg), "n": N, "seed": cfg.seed + s, "gen": cfg.gen or "random"})
            P = generate(sub, mode)
            rep = run_verify(sub, P)
            w.writerow([cfg.theorem, N, cfg.d, rep.input.get("M"), sub.seed,
                        repr(rep.lhs), repr(rep.rhs), repr(rep.margin), rep.verdict])
    _emit(buf.getvalue(), _output_path(cfg.out, "sweep.csv"))
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "corner": cmd_corner,
    "cube": cmd_cube,
    "ball": cmd_ball,
    "verify": cmd_verify,
    "identity": cmd_identity,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="griddisc", description="exact discrete discrepancy and lower-bound checks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--points", help="point CSV file, '-' for stdin")
        p.add_argument("--gen", choices=["random", "vdc", "hammersley", "lattice"])
        p.add_argument("--lattice", type=int, metavar="K", help="the K^d lattice j/K")
        p.add_argument("--d", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--b", type=int, default=2)
        p.add_argument("--tau", type=int, default=1)
        p.add_argument("--m", type=int, help="grid resolution M")
        p.add_argument("--r", type=float, help="ball radius")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file, '-' for stdout")
        p.add_argument("--threads", type=int, default=1, help="worker cap (engines run single-threaded)")
        p.add_argument("--cap", type=int, help="maximum number of grid cells")

    p = sub.add_parser("gen", help="write a point set CSV")
    common(p)
    p.add_argument("--mode", choices=[CORNER, TOROIDAL])

    p = sub.add_parser("corner", help="anchored-box grid norms")
    common(p)
    p.add_argument("--field-csv")

    p = sub.add_parser("cube", help="toroidal cube ensemble norm")
    common(p)
    p.add_argument("--method", choices=["spectral", "direct"], default="spectral")
    p.add_argument("--field-csv")
    p.add_argument("--spectral-csv")

    p = sub.add_parser("ball", help="two-radius toroidal ball norm")
    common(p)
    p.add_argument("--field-csv")

    p = sub.add_parser("verify", help="check one lower bound and print its report")
    common(p)
    p.add_argument("--theorem", required=True, choices=["1", "1-linf", "2", "3"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--method", choices=["spectral", "direct"], help="default: spectral for 2, direct for 3")

    p = sub.add_parser("identity", help="run exact identity suites")
    common(p)
    p.add_argument("--suite", choices=["haar", "plancherel", "ball", "all"], default="all")
    p.add_argument("--nu", type=int)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("sweep", help="N-sweep of a lower bound as CSV")
    common(p)
    p.add_argument("--theorem", required=True, choices=["1", "1-linf", "2", "3"])
    p.add_argument("--ns", required=True)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--kappa", type=float)
    p.add_argument("--method", choices=["spectral", "direct"], help="default: spectral for 2, direct for 3")
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    fields = set(RunConfig.__dataclass_fields__)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in fields})
    if cfg.threads < 1:
        raise ConfigError("--threads must be positive")
    if cfg.d is not None and cfg.d < 1:
        raise ConfigError("--d must be positive")
    return cfg


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.command](cfg)
    except GridDiscError as exc:
        print(f"griddisc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
