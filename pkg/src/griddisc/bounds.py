"""Explicit constants of the three discrete lower bounds and the BoundReport record.

Every constant carries a provenance tag:

``explicit``        a closed-form expression with no free parameter,
``convention``      a value fixed by convention (e.g. 0! = 1 in d = 1),
``calibrated``      a value fixed by the frozen oracle run shipped in
                    ``data/calibration.json`` (the ball bound's c and C).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Any

from scipy.optimize import minimize_scalar

from .errors import PreconditionError

EXPLICIT = "explicit"
CONVENTION = "convention"
CALIBRATED = "calibrated"

Number = float | Fraction


@dataclass(frozen=True)
class Constant:
    symbol: str
    value: Number
    source: str

    def __post_init__(self):
        if self.source not in (EXPLICIT, CONVENTION, CALIBRATED):
            raise PreconditionError(f"unknown provenance {self.source!r}")


def _encode(value: Number | None):
    if value is None:
        return None
    if isinstance(value, Fraction):
        return {"fraction": f"{value.numerator}/{value.denominator}"}
    return float(value)


def _decode(value) -> Number | None:
    if value is None:
        return None
    if isinstance(value, dict):
        return Fraction(value["fraction"])
    return float(value)


@dataclass
class BoundReport:
    """Computed left-hand side against a theorem's right-hand side.

    ``lhs_sq``/``rhs_sq`` are kept exactly (Fraction) whenever the chain of
    constants is rational, so the verdict never depends on a square root.
    ``verdict`` is ``"pass"``, ``"fail"`` or ``"suppressed"`` (a
    precondition such as the M floor was not met).
    """

    theorem: str
    lhs: float
    rhs: float
    lhs_sq: Number | None = None
    rhs_sq: Number | None = None
    constants: list[Constant] = field(default_factory=list)
    verdict: str = "pass"
    margin: float = math.inf
    input: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "lhs_sq": _encode(self.lhs_sq),
            "rhs_sq": _encode(self.rhs_sq),
            "margin": float(self.margin),
            "verdict": self.verdict,
            "constants": [
                {"symbol": c.symbol, "value": _encode(c.value), "source": c.source} for c in self.constants
            ],
            "input": dict(self.input),
            "extra": dict(self.extra),
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(
            theorem=data["theorem"],
            lhs=float(data["lhs"]),
            rhs=float(data["rhs"]),
            lhs_sq=_decode(data.get("lhs_sq")),
            rhs_sq=_decode(data.get("rhs_sq")),
            constants=[Constant(c["symbol"], _decode(c["value"]), c["source"]) for c in data.get("constants", [])],
            verdict=data["verdict"],
            margin=float(data["margin"]),
            input=dict(data.get("input", {})),
            extra=dict(data.get("extra", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        return cls.from_dict(json.loads(text))


def compare(lhs_sq: Number, rhs_sq: Number) -> tuple[str, float]:
    """Verdict and margin lhs/rhs from squared quantities."""
    verdict = "pass" if lhs_sq >= rhs_sq else "fail"
    if rhs_sq == 0:
        return verdict, math.inf
    return verdict, math.sqrt(float(lhs_sq) / float(rhs_sq))


# corner bound ---------------------------------------------------------------

def roth_constant_sq(b: int, d: int) -> Fraction:
    """((b-1)/b^(2d+3))^2 / (d-1)!, exact."""
    if b < 2 or d < 1:
        raise PreconditionError("need b >= 2 and d >= 1")
    return Fraction(b - 1, b ** (2 * d + 3)) ** 2 / math.factorial(d - 1)


def roth_constant(b: int, d: int) -> float:
    return (b - 1) / b ** (2 * d + 3) / math.sqrt(math.factorial(d - 1))


def haar_pairing_floor(b: int, d: int) -> Fraction:
    """Lower bound (b-1)/b^(2d+3) on <D_N, f_r> for each resolution vector."""
    return Fraction(b - 1, b ** (2 * d + 3))


def roth_rhs_sq(N: int, b: int, d: int) -> Number:
    """c^2 (log_b N)^(d-1); exact when d = 1."""
    c2 = roth_constant_sq(b, d)
    if d == 1:
        return c2
    return float(c2) * math.log(N, b) ** (d - 1)


def roth_linf_gain(kappa: Number, b: int) -> Number:
    """kappa [(b-1) b^-7 - kappa b^-5/(b-1-kappa)], the per-level gain of the d=2 test function."""
    if isinstance(kappa, Fraction):
        return kappa * (Fraction(b - 1, b**7) - kappa / (b**5 * (b - 1 - kappa)))
    return kappa * ((b - 1) / b**7 - kappa / (b**5 * (b - 1 - kappa)))


def roth_linf_bound(kappa: Number, nu: int, b: int) -> Number:
    """kappa (nu+1) [(b-1) b^-7 - kappa b^-5/(b-1-kappa)] / 2."""
    return roth_linf_gain(kappa, b) * (nu + 1) / 2


@lru_cache(maxsize=None)
def kappa_opt(b: int) -> float:
    """Numeric argmax of the d=2 gain on (0, 1), to 1e-9."""
    if b < 2:
        raise PreconditionError("need b >= 2")
    res = minimize_scalar(
        lambda k: -roth_linf_gain(k, b),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


# cube bound -----------------------------------------------------------------

def eta(d: int, eps: float) -> float:
    """eta_d(eps) = (1 - 8 eps d)(1 - cos 2 pi eps)^d."""
    return (1 - 8 * eps * d) * (1 - math.cos(2 * math.pi * eps)) ** d


def _e_over(d: int) -> float:
    # (e/(d-1))^(d-1) with the d = 1 convention 1
    if d == 1:
        return 1.0
    return (math.e / (d - 1)) ** (d - 1)


def halasz_constant_sq(d: int) -> float:
    """eta_d(1/9d) / (2^(3d+4) pi^(2d)) (e/(d-1))^(d-1)."""
    if d < 1:
        raise PreconditionError("need d >= 1")
    return eta(d, 1 / (9 * d)) / (2 ** (3 * d + 4) * math.pi ** (2 * d)) * _e_over(d)


def halasz_constant(d: int) -> float:
    return math.sqrt(halasz_constant_sq(d))


def halasz_rhs_sq(N: int, d: int) -> float:
    if d == 1:
        return halasz_constant_sq(1)
    return halasz_constant_sq(d) * math.log(2 * N) ** (d - 1)


def halasz_min_M(N: int, d: int) -> int:
    """Smallest even M >= 18 d N."""
    M = 18 * d * N
    return M + (M % 2)


# ball bound -----------------------------------------------------------------

@lru_cache(maxsize=None)
def calibration() -> dict:
    text = resources.files("griddisc").joinpath("data/calibration.json").read_text(encoding="utf-8")
    return json.loads(text)


def ball_constant(d: int) -> float:
    """Frozen constant c of the two-radius ball bound for dimension d."""
    table = calibration()["ball"]["c"]
    if str(d) not in table:
        raise PreconditionError(f"no calibrated ball constant for d={d}; run griddisc-calibrate")
    return float(table[str(d)])


def ball_floor_factor() -> float:
    """The constant C in M >= C N^(1+1/2d) / r."""
    return float(calibration()["ball"]["C"])


def ball_min_M(N: int, d: int, r: float, C: float | None = None) -> int:
    """Even ceiling of C N^(1+1/2d) / r."""
    if C is None:
        C = ball_floor_factor()
    M = math.ceil(C * N ** (1 + 1 / (2 * d)) / r - 1e-9)
    return M + (M % 2)


def ball_rhs(N: int, d: int, r: float, c: float | None = None) -> float:
    if c is None:
        c = ball_constant(d)
    return c * r ** (d / 2) * N ** (0.5 - 1 / (2 * d))


# registry -------------------------------------------------------------------

def registry(b: int = 2, d: int = 2) -> list[Constant]:
    """Every constant in use for base b and dimension d, with provenance."""
    out = [
        Constant("c_roth", roth_constant(b, d), EXPLICIT),
        Constant("kappa_opt", kappa_opt(b), CONVENTION),
        Constant("eta_d(1/9d)", eta(d, 1 / (9 * d)), EXPLICIT),
        Constant("c_halasz", halasz_constant(d), EXPLICIT),
        Constant("C_ball", ball_floor_factor(), CALIBRATED),
    ]
    if d == 1:
        out.append(Constant("(d-1)!", 1, CONVENTION))
        out.append(Constant("(e/(d-1))^(d-1)", 1.0, CONVENTION))
    try:
        out.append(Constant("c_ball", ball_constant(d), CALIBRATED))
    except PreconditionError:
        pass
    return out


def check_registry(bases=(2, 3, 5), dims=(1, 2, 3, 4)) -> None:
    """Recompute each explicit constant by an independent route; raise on mismatch."""
    for b in bases:
        for d in dims:
            exact = Fraction(b - 1) ** 2 / (Fraction(b) ** (4 * d + 6) * math.factorial(d - 1))
            if roth_constant_sq(b, d) != exact:
                raise AssertionError(f"roth constant mismatch at b={b}, d={d}")
            if not math.isclose(roth_constant(b, d) ** 2, float(exact), rel_tol=1e-12):
                raise AssertionError(f"roth float constant mismatch at b={b}, d={d}")
    for d in dims:
        eps = 1 / (9 * d)
        # 1 - cos(2 pi eps) = 2 sin^2(pi eps)
        alt = (1 - 8 * eps * d) * (2 * math.sin(math.pi * eps) ** 2) ** d
        if not math.isclose(eta(d, eps), alt, rel_tol=1e-12):
            raise AssertionError(f"eta mismatch at d={d}")
        alt_c = alt / (2 ** (3 * d + 4) * math.pi ** (2 * d)) * (math.exp(d - 1) / (d - 1) ** (d - 1) if d > 1 else 1)
        if not math.isclose(halasz_constant_sq(d), alt_c, rel_tol=1e-12):
            raise AssertionError(f"cube constant mismatch at d={d}")


def report_input(**kwargs) -> dict:
    keys = ("N", "d", "M", "b", "r", "seed", "tag")
    return {k: kwargs.get(k) for k in keys} | {k: v for k, v in kwargs.items() if k not in keys}


check_registry()

__all__ = [
    "BoundReport",
    "Constant",
    "asdict",
]
