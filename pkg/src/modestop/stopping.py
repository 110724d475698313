"""Delta-correct mode-estimation stopping rules.

A rule object is fed one sample index at a time through ``observe`` and
queried with ``check``; ``check`` returns the declared value index or None to
continue. The declared index always equals the currently most frequent value.

Rule tokens: ``ppr-1v1`` (constant-time fast path), ``ppr-md``,
``ppr-adaptive``, and ``<engine>-1v1`` / ``<engine>-1vr`` for the engines
``ppr | lucb | kl-lucb | kl-sn | a1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import ENGINE_KINDS, make_engine, one_vs_rest_separated, pair_beats_half
from .instances import DiscreteInstance, SamplePath, SeededStream, TallyState
from .numerics import LOG_GAMMA, ln_gamma_int, log_beta_pdf_half

__all__ = [
    "SampleCapExceeded",
    "TrialRecord",
    "RULE_TOKENS",
    "make_rule",
    "Ppr1v1Rule",
    "Generic1v1Rule",
    "Generic1vrRule",
    "PprMdRule",
    "PprAdaptiveRule",
    "declaration_time",
    "run_mode_estimation",
]

PI_SQUARED_OVER_6_INV = 6.0 / math.pi**2  # the budget series constant k in k/i^2

DEFAULT_SAMPLE_CAP = 1_000_000_000


class SampleCapExceeded(RuntimeError):
    """A stopping rule failed to declare within the configured sample cap."""


@dataclass(frozen=True)
class TrialRecord:
    """One replication: samples drawn, declared index, correctness, seed."""

    samples: int
    declared: int
    truth: int
    correct: bool
    master_seed: int
    stream_index: int


class _Rule:
    def observe(self, idx: int) -> None:  # only the adaptive rule keeps own state
        pass

    def check(self, tally: TallyState) -> int | None:
        raise NotImplementedError


class Ppr1v1Rule(_Rule):
    """Declare first(t) iff Beta(1/2; s_first+1, s_second+1) <= delta/(K-1).

    Constant work per check: the top two counts are sufficient because the
    density at 1/2 is non-decreasing when any lower count is substituted for
    second's (see theory.verify_beta_monotonicity).
    """

    __slots__ = ("_log_threshold",)

    def __init__(self, k: int, delta: float) -> None:
        if k < 2 or not 0.0 < delta < 1.0:
            raise ValueError(f"need K >= 2 and delta in (0, 1), got K={k}, delta={delta}")
        self._log_threshold = math.log(delta / (k - 1))

    def check(self, tally: TallyState) -> int | None:
        counts = tally.counts
        if log_beta_pdf_half(counts[tally.first], counts[tally.second]) <= self._log_threshold:
            return tally.first
        return None


def pair_test_alpha(engine_kind: str, k: int, delta: float) -> float:
    """Per-pair mistake budget for 1v1 tests: delta/(K-1), except that the
    empirical-Bernstein test spends its budget per one-sided bound, so its
    two-sided pair width is evaluated at half that."""
    alpha = delta / (k - 1)
    return alpha / 2.0 if engine_kind == "a1" else alpha


class Generic1v1Rule(_Rule):
    """Pairwise tests of first(t) against every rival at mistake delta/(K-1).

    Only pairs involving the current leader are tested: no other value can be
    declared, and the stop condition still quantifies over all rivals.
    """

    __slots__ = ("engine",)

    def __init__(self, engine_kind: str, k: int, delta: float) -> None:
        self.engine = make_engine(engine_kind, pair_test_alpha(engine_kind, k, delta))

    def check(self, tally: TallyState) -> int | None:
        counts = tally.counts
        first = tally.first
        c_first = counts[first]
        engine = self.engine
        # the runner-up is the hardest pair; test it first to fail fast
        if not pair_beats_half(engine, c_first, counts[tally.second]):
            return None
        for j, c in enumerate(counts):
            if j != first and not pair_beats_half(engine, c_first, c):
                return None
        return first


class Generic1vrRule(_Rule):
    """One-vs-rest intervals at mistake delta/K; declare when the leader's
    LCB clears every rival's UCB."""

    __slots__ = ("engine",)

    def __init__(self, engine_kind: str, k: int, delta: float) -> None:
        self.engine = make_engine(engine_kind, delta / k)

    def check(self, tally: TallyState) -> int | None:
        counts = tally.counts
        first = tally.first
        c_first = counts[first]
        t = tally.total
        engine = self.engine
        if not one_vs_rest_separated(engine, c_first, counts[tally.second], t):
            return None
        for j, c in enumerate(counts):
            if j != first and not one_vs_rest_separated(engine, c_first, c, t):
                return None
        return first


class PprMdRule(_Rule):
    """Dirichlet-posterior stopping: the confidence set must contain no point
    where any rival ties or beats the leader.

    For rival j the density maximum over the tied slice x_first = x_j sits at
    x_first = x_j = (s_first + s_j) / 2t with the remaining coordinates at
    their empirical means; the rule declares once the posterior quantity at
    every such point falls to delta / (K-1)!.
    """

    __slots__ = ("_k", "_log_threshold")

    def __init__(self, k: int, delta: float) -> None:
        if k < 2 or not 0.0 < delta < 1.0:
            raise ValueError(f"need K >= 2 and delta in (0, 1), got K={k}, delta={delta}")
        self._k = k
        self._log_threshold = math.log(delta) - ln_gamma_int(k)

    def slice_log_quantity(self, counts, j: int, first: int) -> float:
        """Log of (prod x*_i^{s_i}) (t+K-1)! / prod s_i! at the j-slice maximizer."""
        t = sum(counts)
        lg = LOG_GAMMA
        log_t = math.log(t)
        acc = lg(t + self._k)
        for i, c in enumerate(counts):
            acc -= lg(c + 1)
            if c > 0 and i != first and i != j:
                acc += c * (math.log(c) - log_t)
        pair = counts[first] + counts[j]
        if pair > 0:
            acc += pair * (math.log(pair) - log_t - math.log(2.0))
        return acc

    def check(self, tally: TallyState) -> int | None:
        t = tally.total
        if t == 0:
            return None
        counts = tally.counts
        first = tally.first
        lg = LOG_GAMMA
        log_t = math.log(t)
        log_coeff = lg(t + self._k)
        base = 0.0
        for c in counts:
            log_coeff -= lg(c + 1)
            if c > 0:
                base += c * (math.log(c) - log_t)
        c_first = counts[first]
        term_first = c_first * (math.log(c_first) - log_t) if c_first else 0.0
        threshold = self._log_threshold
        for j, c_j in enumerate(counts):
            if j == first:
                continue
            term_j = c_j * (math.log(c_j) - log_t) if c_j else 0.0
            pair = c_first + c_j
            slice_term = pair * (math.log(pair) - log_t - math.log(2.0)) if pair else 0.0
            if log_coeff + base - term_first - term_j + slice_term > threshold:
                return None
        return first


class PprAdaptiveRule(_Rule):
    """Pairwise posterior tests over an unknown, growing answer set.

    The mistake budget delta is pre-split into the infinite sequence
    k delta / i^2 with k = 6 / pi^2 (summing to delta). Each newly revealed
    answer opens one pairwise test against every earlier answer, in their
    discovery order, consuming the next unused budgets. A lone discovered
    answer is never declared: no pairwise test exists that could confirm it.
    """

    __slots__ = ("_delta", "_rank", "_labels", "_counts", "_log_budgets", "_next_index")

    def __init__(self, delta: float) -> None:
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self._delta = delta
        self._rank: dict[int, int] = {}
        self._labels: list[int] = []
        self._counts: list[int] = []
        self._log_budgets: dict[tuple[int, int], float] = {}
        self._next_index = 1

    @property
    def discovered(self) -> tuple[int, ...]:
        return tuple(self._labels)

    def budget(self, label_a: int, label_b: int) -> float:
        ra, rb = self._rank[label_a], self._rank[label_b]
        return math.exp(self._log_budgets[(min(ra, rb), max(ra, rb))])

    def assigned_budget_total(self) -> float:
        return sum(math.exp(v) for v in self._log_budgets.values())

    def observe(self, idx: int) -> None:
        rank = self._rank.get(idx)
        if rank is None:
            rank = len(self._labels)
            self._rank[idx] = rank
            self._labels.append(idx)
            self._counts.append(0)
            for earlier in range(rank):
                self._log_budgets[(earlier, rank)] = math.log(
                    PI_SQUARED_OVER_6_INV * self._delta / self._next_index**2
                )
                self._next_index += 1
        self._counts[rank] += 1

    def check(self, tally: TallyState | None = None) -> int | None:
        counts = self._counts
        n = len(counts)
        if n < 2:
            return None
        best = 0
        for r in range(1, n):
            if counts[r] > counts[best]:
                best = r
        c_best = counts[best]
        budgets = self._log_budgets
        for r, c in enumerate(counts):
            if r == best:
                continue
            if c >= c_best:
                return None  # a tie cannot have been won
            pair = (r, best) if r < best else (best, r)
            if log_beta_pdf_half(c_best, c) > budgets[pair]:
                return None
        return self._labels[best]


RULE_TOKENS = tuple(
    ["ppr-1v1", "ppr-md", "ppr-adaptive"]
    + [f"{kind}-1v1" for kind in ENGINE_KINDS if kind != "ppr"]
    + [f"{kind}-1vr" for kind in ENGINE_KINDS]
)


def make_rule(token: str, k: int, delta: float, fast_ppr_1v1: bool = True) -> _Rule:
    """Build a stopping rule from its CLI token.

    ``ppr-1v1`` uses the constant-time density test; passing
    ``fast_ppr_1v1=False`` routes it through the generic pairwise wrapper
    instead (the two produce identical verdicts; tests rely on this).
    """
    if token == "ppr-1v1":
        return Ppr1v1Rule(k, delta) if fast_ppr_1v1 else Generic1v1Rule("ppr", k, delta)
    if token == "ppr-md":
        return PprMdRule(k, delta)
    if token == "ppr-adaptive":
        return PprAdaptiveRule(delta)
    for kind in ENGINE_KINDS:
        if token == f"{kind}-1v1":
            return Generic1v1Rule(kind, k, delta)
        if token == f"{kind}-1vr":
            return Generic1vrRule(kind, k, delta)
    raise ValueError(f"unknown rule token {token!r}; expected one of {RULE_TOKENS}")


def declaration_time(
    instance: DiscreteInstance,
    rule_token: str,
    delta: float,
    path: SamplePath,
    check_every: int = 1,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    fast_ppr_1v1: bool = True,
) -> tuple[int, int]:
    """Run one rule over a (possibly shared) sample path.

    Returns (samples consumed, declared index). Raises SampleCapExceeded when
    the rule has not declared after sample_cap samples.
    """
    if check_every < 1:
        raise ValueError("check_every must be >= 1")
    rule = make_rule(rule_token, instance.k, delta, fast_ppr_1v1=fast_ppr_1v1)
    tally = TallyState(instance.k)
    observe = rule.observe
    check = rule.check
    update = tally.update
    t = 0
    while t < sample_cap:
        idx = path[t]
        t += 1
        update(idx)
        observe(idx)
        if t % check_every == 0:
            verdict = check(tally)
            if verdict is not None:
                return t, verdict
    raise SampleCapExceeded(
        f"rule {rule_token} did not declare within {sample_cap} samples "
        f"(instance K={instance.k}, delta={delta})"
    )


def run_mode_estimation(
    instance: DiscreteInstance,
    rule_token: str,
    delta: float,
    stream: SeededStream,
    check_every: int = 1,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> TrialRecord:
    """Draw i.i.d. samples from the instance until the rule declares."""
    path = SamplePath(instance, stream)
    samples, declared = declaration_time(
        instance, rule_token, delta, path, check_every=check_every, sample_cap=sample_cap
    )
    truth = instance.true_mode
    return TrialRecord(
        samples=samples,
        declared=declared,
        truth=truth,
        correct=declared == truth,
        master_seed=stream.master_seed,
        stream_index=stream.stream_index,
    )
