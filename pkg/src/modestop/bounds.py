"""Five interchangeable confidence-bound engines on Bernoulli counts.

Each engine maps (successes s, total t, mistake probability alpha) to an
interval that contains the empirical mean. Besides the interval surface,
every engine exposes two closed-form predicates used by the stopping rules:

* ``pair_beats_half``    - the pair interval excludes 1/2 on the leader's side
* ``one_vs_rest_separated`` - one value's LCB is at or above another's UCB

For all five engines the two-sided intervals are mirror images under
p -> 1 - p, so the predicates are exactly equivalent to the interval
comparisons while avoiding the numeric inversions in the per-sample loop
(the equivalence is asserted in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import (
    Interval,
    FULL_INTERVAL,
    LOG_GAMMA,
    invert_kl_lower,
    invert_kl_upper,
    kl_bernoulli,
    log_beta_pdf_half,
    posterior_level_crossings,
)

__all__ = [
    "ENGINE_KINDS",
    "BoundEngine",
    "make_engine",
    "kl_sn_gamma",
    "lucb_exploration_rate",
    "kl_sn_exploration_rate",
    "hoeffding_lucb_bounds",
    "kl_lucb_bounds",
    "kl_sn_bounds",
    "a1_bounds",
    "ppr_bounds",
    "engine_interval",
    "pair_beats_half",
    "one_vs_rest_separated",
]

ENGINE_KINDS = ("ppr", "lucb", "kl-lucb", "kl-sn", "a1")

# LUCB-family exploration rate constants: beta(t, alpha) = ln(405.5 t^1.1 / alpha)
LUCB_SCALE = 405.5
LUCB_POWER = 1.1

_KL_SN_GAMMA_CACHE: dict[float, float] = {}


def kl_sn_gamma(alpha: float) -> float:
    """The root gamma > 1 of 2 e^2 gamma e^-gamma = alpha.

    gamma e^-gamma is decreasing for gamma > 1, so the root on the decreasing
    branch is unique; it is located by bisection on [1 + 1e-9, 200] and
    cached per alpha.
    """
    cached = _KL_SN_GAMMA_CACHE.get(alpha)
    if cached is not None:
        return cached
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    target = alpha / (2.0 * math.e**2)

    def g(x: float) -> float:
        return x * math.exp(-x)

    lo, hi = 1.0 + 1e-9, 200.0
    if g(lo) <= target or g(hi) >= target:
        raise ValueError(f"no KL-SN rate root gamma > 1 exists for alpha={alpha}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10:
            break
    root = 0.5 * (lo + hi)
    _KL_SN_GAMMA_CACHE[alpha] = root
    return root


def lucb_exploration_rate(t: int, alpha: float) -> float:
    return math.log(LUCB_SCALE * t**LUCB_POWER / alpha)


def kl_sn_exploration_rate(t: int, gamma: float) -> float:
    # defined for t >= 3 so that ln ln t > 0
    return gamma * (1.0 + math.log(gamma)) / ((gamma - 1.0) * math.log(gamma)) * math.log(
        math.log(t)
    ) + gamma


def _clip(lo: float, hi: float) -> Interval:
    return Interval(max(0.0, lo), min(1.0, hi))


def hoeffding_lucb_bounds(s: int, t: int, alpha: float) -> Interval:
    """p_hat +- sqrt(beta(t, alpha) / 2t), clipped to [0, 1]."""
    if t < 1:
        return FULL_INTERVAL
    p_hat = s / t
    w = math.sqrt(lucb_exploration_rate(t, alpha) / (2.0 * t))
    return _clip(p_hat - w, p_hat + w)


def kl_lucb_bounds(s: int, t: int, alpha: float) -> Interval:
    """KL inversion of the LUCB exploration rate."""
    if t < 1:
        return FULL_INTERVAL
    p_hat = s / t
    beta = lucb_exploration_rate(t, alpha)
    return Interval(invert_kl_lower(p_hat, t, beta), invert_kl_upper(p_hat, t, beta))


def kl_sn_bounds(s: int, t: int, alpha: float) -> Interval:
    """KL inversion of the self-normalized exploration rate; [0, 1] below t=3."""
    if t < 3:
        return FULL_INTERVAL
    p_hat = s / t
    beta = kl_sn_exploration_rate(t, kl_sn_gamma(alpha))
    return Interval(invert_kl_lower(p_hat, t, beta), invert_kl_upper(p_hat, t, beta))


def _a1_width(s: int, t: int, alpha: float) -> float:
    # empirical variance of 0/1 samples: V = s (t - s) / (t (t - 1))
    variance = s * (t - s) / (t * (t - 1.0))
    budget = math.log(4.0 * t * t / alpha)
    return math.sqrt(2.0 * variance * budget / t) + 7.0 * budget / (3.0 * (t - 1.0))


def a1_bounds(s: int, t: int, alpha: float) -> Interval:
    """Empirical-Bernstein interval; [0, 1] below t=2 (the width divides by t-1)."""
    if t < 2:
        return FULL_INTERVAL
    p_hat = s / t
    w = _a1_width(s, t, alpha)
    return _clip(p_hat - w, p_hat + w)


def ppr_bounds(s: int, t: int, alpha: float) -> Interval:
    """Level set of the Beta(s+1, t-s+1) posterior density at level alpha.

    This is the anytime-valid posterior confidence set for a uniform prior:
    the set of parameters whose posterior density still exceeds the mistake
    probability.
    """
    return posterior_level_crossings(s + 1, t - s + 1, alpha)


_INTERVAL_FUNCS = {
    "ppr": ppr_bounds,
    "lucb": hoeffding_lucb_bounds,
    "kl-lucb": kl_lucb_bounds,
    "kl-sn": kl_sn_bounds,
    "a1": a1_bounds,
}


@dataclass(frozen=True)
class BoundEngine:
    """One confidence-bound computation with its per-test mistake probability.

    Engines are immutable; the KL-SN root is computed eagerly at construction
    so that shared engines never race on the cache.
    """

    kind: str
    alpha: float
    gamma: float = 0.0

    def interval(self, s: int, t: int) -> Interval:
        return _INTERVAL_FUNCS[self.kind](s, t, self.alpha)


def make_engine(kind: str, alpha: float) -> BoundEngine:
    if kind not in ENGINE_KINDS:
        raise ValueError(f"unknown bound engine {kind!r}; expected one of {ENGINE_KINDS}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    gamma = kl_sn_gamma(alpha) if kind == "kl-sn" else 0.0
    return BoundEngine(kind, alpha, gamma)


def engine_interval(engine: BoundEngine, s: int, t: int) -> Interval:
    return engine.interval(s, t)


def pair_beats_half(engine: BoundEngine, s_lead: int, s_trail: int) -> bool:
    """True when the pair interval of the leader excludes 1/2 from above,
    i.e. its lower confidence bound is at or above 1/2."""
    if s_lead < s_trail:
        return False
    t = s_lead + s_trail
    if t == 0:
        return False
    kind = engine.kind
    if kind == "ppr":
        # the posterior level set excludes 1/2 iff the density there is <= alpha
        return log_beta_pdf_half(s_lead, s_trail) <= math.log(engine.alpha)
    p_hat = s_lead / t
    if kind == "lucb":
        return p_hat - math.sqrt(lucb_exploration_rate(t, engine.alpha) / (2.0 * t)) >= 0.5
    if kind == "kl-lucb":
        return p_hat > 0.5 and t * kl_bernoulli(p_hat, 0.5) >= lucb_exploration_rate(
            t, engine.alpha
        )
    if kind == "kl-sn":
        if t < 3:
            return False
        return p_hat > 0.5 and t * kl_bernoulli(p_hat, 0.5) >= kl_sn_exploration_rate(
            t, engine.gamma
        )
    if kind == "a1":
        return t >= 2 and p_hat - _a1_width(s_lead, t, engine.alpha) >= 0.5
    raise ValueError(f"unknown bound engine {kind!r}")


def _neg_entropy(p: float) -> float:
    acc = 0.0
    if p > 0.0:
        acc += p * math.log(p)
    if p < 1.0:
        acc += (1.0 - p) * math.log1p(-p)
    return acc


def _logistic(x: float) -> float:
    if x >= 0:
        z = math.exp(-x)
        return 1.0 / (1.0 + z)
    z = math.exp(x)
    return z / (1.0 + z)


def one_vs_rest_separated(engine: BoundEngine, s_lead: int, s_trail: int, t: int) -> bool:
    """True when the leading value's LCB is at or above the trailing value's
    UCB, both intervals taken at the shared total t.

    For the KL and PPR engines the comparison is made at the crossing point
    of the two one-parameter log densities / divergences, where the smaller
    of the two reaches its maximum over the gap between the empirical means;
    both curves agree there, so disjointness reduces to one closed-form test.
    """
    if s_lead <= s_trail or t < 1:
        return False
    kind = engine.kind
    alpha = engine.alpha
    if kind == "lucb":
        return (s_lead - s_trail) / t >= 2.0 * math.sqrt(
            lucb_exploration_rate(t, alpha) / (2.0 * t)
        )
    if kind == "a1":
        if t < 2:
            return False
        return s_lead / t - _a1_width(s_lead, t, alpha) >= s_trail / t + _a1_width(
            s_trail, t, alpha
        )
    p_lead = s_lead / t
    p_trail = s_trail / t
    if kind in ("kl-lucb", "kl-sn"):
        if kind == "kl-sn":
            if t < 3:
                return False
            beta = kl_sn_exploration_rate(t, engine.gamma)
        else:
            beta = lucb_exploration_rate(t, alpha)
        # crossing of D(p_lead || x) and D(p_trail || x) in x
        x = _logistic((_neg_entropy(p_lead) - _neg_entropy(p_trail)) / (p_lead - p_trail))
        x = min(max(x, 1e-15), 1.0 - 1e-15)
        return t * kl_bernoulli(p_lead, x) >= beta
    if kind == "ppr":
        lg = LOG_GAMMA
        log_norm_lead = lg(t + 2) - lg(s_lead + 1) - lg(t - s_lead + 1)
        log_norm_trail = lg(t + 2) - lg(s_trail + 1) - lg(t - s_trail + 1)
        # crossing of the two Beta posterior log densities
        x = _logistic((log_norm_trail - log_norm_lead) / (s_lead - s_trail))
        x = min(max(x, 1e-300), 1.0 - 1e-16)
        log_density = log_norm_lead + s_lead * math.log(x) + (t - s_lead) * math.log1p(-x)
        return log_density <= math.log(alpha)
    raise ValueError(f"unknown bound engine {kind!r}")
