"""Probabilistic verification of replicated computation against Byzantine nodes.

A pool of N nodes holds one correct answer (index 0); a floor(f N) Byzantine
minority reports wrong answers, either all the same one (two answers total)
or spread evenly over K-1 wrong answers. Batches of m nodes are drawn
uniformly without replacement and their reports feed either the classical
sequential probability ratio test (which needs an assumed Byzantine ceiling
f_max) or a posterior mode-estimation rule (which does not).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .instances import SeededStream, TallyState, derive_stream
from .stopping import PprAdaptiveRule, SampleCapExceeded, make_rule

__all__ = [
    "NodePool",
    "SPRTState",
    "sprt_threshold",
    "sprt_step",
    "draw_batch",
    "VerificationRecord",
    "run_verification",
    "SweepCell",
    "sweep_f",
    "BLOCKCHAIN_POLICIES",
]

BLOCKCHAIN_POLICIES = ("sprt", "ppr-1v1", "ppr-1vr", "ppr-adaptive")

DEFAULT_STEP_CAP = 1_000_000


@dataclass(frozen=True)
class NodePool:
    """N nodes, floor(f N) of them Byzantine, queried in batches of m.

    n_answers = 2 puts every Byzantine node on the single wrong answer 1;
    n_answers = K spreads them round-robin over wrong answers 1..K-1 so the
    wrong answers are equally common. Honest nodes always report answer 0.
    """

    n_nodes: int
    byzantine_fraction: float
    batch_size: int
    n_answers: int = 2

    def __post_init__(self) -> None:
        if self.n_nodes < 1:
            raise ValueError("need at least one node")
        if not 0.0 <= self.byzantine_fraction < 0.5:
            raise ValueError(
                f"the Byzantine fraction must lie in [0, 1/2), got {self.byzantine_fraction}"
            )
        if not 1 <= self.batch_size <= self.n_nodes:
            raise ValueError("batch size must lie in [1, N]")
        if self.n_answers < 2:
            raise ValueError("need at least two possible answers")

    @property
    def byzantine_count(self) -> int:
        return int(self.byzantine_fraction * self.n_nodes)

    @property
    def query_fraction(self) -> float:
        return self.batch_size / self.n_nodes

    def colors(self) -> np.ndarray:
        """Node counts per answer: honest nodes first, then the wrong answers
        in round-robin shares."""
        byz = self.byzantine_count
        wrong = self.n_answers - 1
        base, extra = divmod(byz, wrong)
        sizes = [self.n_nodes - byz]
        sizes.extend(base + (1 if w < extra else 0) for w in range(wrong))
        return np.asarray(sizes, dtype=np.int64)


def sprt_threshold(delta: float, n: int, m: int, f_max: float) -> float:
    """ln((1-delta)/delta) * 2q(1-q)N (1-f_max) f_max / (1-2 f_max), q = m/N."""
    if not 0.0 < f_max < 0.5:
        raise ValueError(f"f_max must lie in (0, 1/2), got {f_max}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 1 <= m <= n:
        raise ValueError("batch size must lie in [1, N]")
    q = m / n
    return (
        math.log((1.0 - delta) / delta)
        * 2.0
        * q
        * (1.0 - q)
        * n
        * (1.0 - f_max)
        * f_max
        / (1.0 - 2.0 * f_max)
    )


@dataclass
class SPRTState:
    """Per-answer statistics l_i = sum_t (2 c_{i,t} - m) m, kept incrementally.

    The closed form l_i = m (2 * totals_i - T m) over integer totals makes the
    incremental value exactly equal to a recomputation from the batch history.
    """

    m: int
    threshold: float
    totals: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    steps: int = 0

    def statistics(self) -> np.ndarray:
        return self.m * (2 * self.totals - self.steps * self.m)


def sprt_step(state: SPRTState, batch_counts: np.ndarray) -> int | None:
    """Fold one batch into the statistics; declare the lowest-index answer
    whose statistic exceeds the threshold, if any."""
    counts = np.asarray(batch_counts, dtype=np.int64)
    if counts.sum() != state.m:
        raise ValueError(f"batch counts must sum to m={state.m}, got {counts.sum()}")
    if state.totals.shape != counts.shape:
        if state.steps:
            raise ValueError("answer-count dimension changed mid-run")
        state.totals = np.zeros_like(counts)
    state.totals += counts
    state.steps += 1
    stats = state.statistics()
    crossing = np.nonzero(stats > state.threshold)[0]
    return int(crossing[0]) if crossing.size else None


def draw_batch(pool: NodePool, stream: SeededStream) -> np.ndarray:
    """Counts per answer from one batch of m distinct nodes drawn uniformly."""
    return stream.generator.multivariate_hypergeometric(pool.colors(), pool.batch_size)


@dataclass(frozen=True)
class VerificationRecord:
    samples: int
    declared: int
    correct: bool


def run_verification(
    pool: NodePool,
    policy: str,
    delta: float,
    f_max: float | None,
    stream: SeededStream,
    step_cap: int = DEFAULT_STEP_CAP,
) -> VerificationRecord:
    """Query batches until the policy declares an answer.

    The posterior policies treat every individual node report as one sample
    of the answer distribution and ignore f_max; declared-vs-correct is
    judged against answer 0. Samples are counted as steps * m.
    """
    if policy not in BLOCKCHAIN_POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {BLOCKCHAIN_POLICIES}")
    m = pool.batch_size
    if policy == "sprt":
        if f_max is None:
            raise ValueError("SPRT requires f_max")
        state = SPRTState(m=m, threshold=sprt_threshold(delta, pool.n_nodes, m, f_max))
        for step in range(1, step_cap + 1):
            declared = sprt_step(state, draw_batch(pool, stream))
            if declared is not None:
                return VerificationRecord(step * m, declared, declared == 0)
        raise SampleCapExceeded(f"SPRT did not declare within {step_cap} batches")

    rule_token = {"ppr-1v1": "ppr-1v1", "ppr-1vr": "ppr-1vr", "ppr-adaptive": "ppr-adaptive"}[
        policy
    ]
    rule = make_rule(rule_token, pool.n_answers, delta)
    tally = TallyState(pool.n_answers)
    adaptive = isinstance(rule, PprAdaptiveRule)
    for step in range(1, step_cap + 1):
        counts = draw_batch(pool, stream)
        tally.add_counts(counts)
        if adaptive:
            # reports feed the discovery list in answer-index order
            for answer, c in enumerate(counts):
                for _ in range(int(c)):
                    rule.observe(answer)
        declared = rule.check(tally)
        if declared is not None:
            return VerificationRecord(step * m, declared, declared == 0)
    raise SampleCapExceeded(f"{policy} did not declare within {step_cap} batches")


@dataclass(frozen=True)
class SweepCell:
    f: float
    policy: str
    runs: int
    mean_samples: float
    stderr_samples: float
    error_rate: float


def sweep_f(
    n: int,
    m: int,
    k: int,
    delta: float,
    f_max: float,
    f_values,
    policies,
    runs: int,
    master_seed: int,
) -> list[SweepCell]:
    """Replicate run_verification over a grid of Byzantine fractions.

    Each (f, policy, run) cell draws its own derived stream, so cells are
    reproducible independently of sweep order.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cells: list[SweepCell] = []
    for fi, f in enumerate(f_values):
        pool = NodePool(n_nodes=n, byzantine_fraction=f, batch_size=m, n_answers=k)
        for pi, policy in enumerate(policies):
            samples = np.empty(runs, dtype=np.float64)
            errors = 0
            for r in range(runs):
                rec = run_verification(
                    pool, policy, delta, f_max, derive_stream(master_seed, fi, pi, r)
                )
                samples[r] = rec.samples
                errors += not rec.correct
            mean = float(samples.mean())
            stderr = float(samples.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
            cells.append(SweepCell(f, policy, runs, mean, stderr, errors / runs))
    return cells
