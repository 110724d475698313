"""Closed-form sample-complexity calculators and numeric inequality verifiers.

The calculators give the information-theoretic lower bound and the published
upper bounds for the empirical-Bernstein rule, the Bernoulli posterior test,
and its pairwise K-value generalization. The verifiers sweep the two
inequalities that the pairwise analysis leans on: the posterior-density
crossing inequality behind "1v1 stops before 1vr", and the monotonicity of
the Beta density at 1/2 in its second shape parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .numerics import LOG_GAMMA

__all__ = [
    "BoundReport",
    "lower_bound",
    "a1_upper_bound",
    "ppr_bernoulli_upper",
    "ppr_1v1_upper",
    "verify_thm3_margin",
    "conjecture_theta",
    "verify_1v1_1vr_conjecture",
    "beta_pdf_half_exact",
    "verify_beta_monotonicity",
]


@dataclass(frozen=True)
class BoundReport:
    """Sample-count calculator outputs for one (p1, p2, K, delta) instance."""

    lower: float
    a1_upper: float
    ppr_1v1_upper: float
    ppr_bernoulli_upper: float | None  # K = 2 only

    def as_rows(self) -> list[tuple[str, float | None]]:
        return [
            ("lower", self.lower),
            ("a1_upper", self.a1_upper),
            ("ppr_1v1_upper", self.ppr_1v1_upper),
            ("ppr_bernoulli_upper", self.ppr_bernoulli_upper),
        ]


def _check_gap(p1: float, p2: float) -> None:
    if not 1.0 >= p1 > p2 >= 0.0:
        raise ValueError(f"need 1 >= p1 > p2 >= 0, got p1={p1}, p2={p2}")


def lower_bound(p1: float, p2: float, delta: float) -> float:
    """p1 / (p1 - p2)^2 * ln(1 / (2.4 delta)): expected samples any
    delta-correct rule must draw."""
    _check_gap(p1, p2)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return p1 / (p1 - p2) ** 2 * math.log(1.0 / (2.4 * delta))


def a1_upper_bound(p1: float, p2: float, k: int, delta: float) -> float:
    """(592/3) p1/(p1-p2)^2 ln((592/3) sqrt(K/delta) p1/(p1-p2)^2)."""
    _check_gap(p1, p2)
    if k < 2:
        raise ValueError(f"need K >= 2, got {k}")
    c = 592.0 / 3.0
    lead = c * p1 / (p1 - p2) ** 2
    return lead * math.log(c * math.sqrt(k / delta) * p1 / (p1 - p2) ** 2)


def ppr_bernoulli_upper(p1: float, delta: float) -> float:
    """20.775 p1/(p1-1/2)^2 ln(2.49 / ((p1-1/2)^2 delta)) for p1 > 1/2."""
    if not 0.5 < p1 <= 1.0:
        raise ValueError(f"need p1 in (1/2, 1], got {p1}")
    gap = p1 - 0.5
    return 20.775 * p1 / gap**2 * math.log(2.49 / (gap**2 * delta))


def ppr_1v1_upper(p1: float, p2: float, k: int, delta: float) -> float:
    """194.07 p1/(p1-p2)^2 ln(sqrt(79.68 (K-1)/delta) p1/(p1-p2))."""
    _check_gap(p1, p2)
    if k < 2:
        raise ValueError(f"need K >= 2, got {k}")
    gap = p1 - p2
    return 194.07 * p1 / gap**2 * math.log(math.sqrt(79.68 * (k - 1) / delta) * p1 / gap)


def bound_report(p1: float, p2: float, k: int, delta: float) -> BoundReport:
    return BoundReport(
        lower=lower_bound(p1, p2, delta),
        a1_upper=a1_upper_bound(p1, p2, k, delta),
        ppr_1v1_upper=ppr_1v1_upper(p1, p2, k, delta),
        ppr_bernoulli_upper=ppr_bernoulli_upper(p1, delta) if k == 2 else None,
    )


def verify_thm3_margin(p1: float, p2: float, pj: float, k: int, delta: float) -> bool:
    """Numeric check of the constant chain u < (1 - l)(p1 + pj) t*.

    u is the Bernoulli upper bound at the pair parameter q1 = p1/(p1+pj) with
    mistake delta' = delta / (2(K-1)); l is the Chernoff slack evaluated at
    t*; t* is the pairwise upper bound. The chain holding means the pairwise
    bound's constants absorb the pair-thinning slack.
    """
    if not (p1 > p2 >= pj > 0.0):
        raise ValueError(f"need p1 > p2 >= pj > 0, got {(p1, p2, pj)}")
    delta_prime = delta / (2.0 * (k - 1))
    q1 = p1 / (p1 + pj)
    u = 20.775 * q1 / (q1 - 0.5) ** 2 * math.log(2.49 / ((q1 - 0.5) ** 2 * delta_prime))
    t_star = ppr_1v1_upper(p1, p2, k, delta)
    slack = math.sqrt(2.0 * math.log(1.0 / delta_prime) / ((p1 + pj) * t_star))
    return u < (1.0 - slack) * (p1 + pj) * t_star


def conjecture_theta(x: int, y: int, f: int) -> float:
    """The density-crossing point theta* with
    theta*/(1-theta*) = [x! (y+f)! / (y! (x+f)!)]^(1/(x-y)), in log space."""
    if not (x > y >= 1 and f >= 1):
        raise ValueError(f"need x > y >= 1 and f >= 1, got {(x, y, f)}")
    lg = LOG_GAMMA
    log_odds = (lg(x + 1) + lg(y + f + 1) - lg(y + 1) - lg(x + f + 1)) / (x - y)
    if log_odds >= 0:
        z = math.exp(-log_odds)
        return 1.0 / (1.0 + z)
    z = math.exp(log_odds)
    return z / (1.0 + z)


def _log_beta_fn(a: int, b: int) -> float:
    lg = LOG_GAMMA
    return lg(a) + lg(b) - lg(a + b)


def verify_1v1_1vr_conjecture(
    x_max: int, y_max: int, f_max: int, k: int | None = None
) -> list[tuple[int, int, int]]:
    """Sweep the crossing inequality over 1 <= y < x <= x_max, y <= y_max,
    1 <= f <= f_max and return the failing triples.

    The checked inequality is
        theta*^x (1-theta*)^(y+f) / B(x+1, y+f+1)
            >= F / (2^(x+y) B(x+1, y+1))
    with F = 1 in the strong form (k is None) and F = (k-1)/k otherwise; the
    strong form implies the k-form for every k.
    """
    LOG_GAMMA.ensure(x_max + f_max + 3)
    log_factor = 0.0 if k is None else math.log((k - 1) / k)
    ln2 = math.log(2.0)
    failures: list[tuple[int, int, int]] = []
    for x in range(2, x_max + 1):
        for y in range(1, min(x - 1, y_max) + 1):
            for f in range(1, f_max + 1):
                theta = conjecture_theta(x, y, f)
                lhs = (
                    x * math.log(theta)
                    + (y + f) * math.log1p(-theta)
                    - _log_beta_fn(x + 1, y + f + 1)
                )
                rhs = log_factor - (x + y) * ln2 - _log_beta_fn(x + 1, y + 1)
                if lhs < rhs - 1e-9 * max(1.0, abs(rhs)):
                    failures.append((x, y, f))
    return failures


def beta_pdf_half_exact(a: int, b: int) -> Fraction:
    """Exact rational value of the Beta(a, b) density at 1/2."""
    if a < 1 or b < 1:
        raise ValueError(f"integer shapes must be >= 1, got a={a}, b={b}")
    num = math.factorial(a + b - 1)
    den = math.factorial(a - 1) * math.factorial(b - 1)
    return Fraction(num, den) / Fraction(2 ** (a + b - 2))


def verify_beta_monotonicity(a_max: int, b_max: int) -> bool:
    """Exact-rational sweep of Beta(1/2; a, b+1) >= Beta(1/2; a, b) over all
    integer a >= b >= 1 within the limits.

    This is the fact that lets the pairwise rule test only the top two
    counts: replacing the runner-up with any smaller count only lowers the
    density at 1/2.
    """
    for a in range(1, a_max + 1):
        for b in range(1, min(a, b_max) + 1):
            if beta_pdf_half_exact(a, b + 1) < beta_pdf_half_exact(a, b):
                return False
    return True
