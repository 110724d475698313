"""Experiment orchestration: replicated trials, summaries, and file output.

Determinism contract: trial i of an experiment always runs on
derive_stream(master_seed, i), trials are aggregated in index order, and the
per-trial records written to JSONL are sufficient to recompute every summary
row exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

from .instances import DiscreteInstance, derive_stream
from .stopping import TrialRecord, run_mode_estimation

__all__ = [
    "ExperimentSpec",
    "SummaryRow",
    "summarize",
    "run_experiment",
    "write_summary_csv",
    "write_trials_jsonl",
    "figure1_sweep",
    "table1_suite",
    "TABLE1_INSTANCES",
    "BERNOULLI_ENGINE_RULES",
]

# Table-1 problem instances; the tuple notation expands "p x multiplicity"
TABLE1_INSTANCES: dict[str, tuple[float, ...]] = {
    "P1": (0.5, 0.25, 0.25),
    "P2": (0.4, 0.2, 0.2, 0.2),
    "P3": (0.2,) + (0.1,) * 8,
    "P4": (0.1,) + (0.05,) * 18,
    "P5": (0.35, 0.33, 0.12, 0.1, 0.1),
    "P6": (0.35, 0.33) + (0.04,) * 8,
}

TABLE1_RULES = ("ppr-1v1", "ppr-1vr", "kl-sn-1v1", "kl-sn-1vr", "a1-1v1", "a1-1vr")

# engine comparison order used by the Bernoulli sweeps
BERNOULLI_ENGINE_RULES = ("ppr-1v1", "kl-sn-1v1", "kl-lucb-1v1", "lucb-1v1", "a1-1v1")


@dataclass(frozen=True)
class ExperimentSpec:
    probs: tuple[float, ...]
    rule: str
    delta: float
    replications: int
    master_seed: int
    check_every: int = 1
    suite: str = ""
    instance_label: str = ""

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class SummaryRow:
    suite: str
    instance: str
    rule: str
    scheme: str
    delta: float
    n: int
    mean_samples: float
    stderr_samples: float
    mistake_rate: float


def _scheme_of(rule: str) -> str:
    for scheme in ("1v1", "1vr", "md", "adaptive"):
        if rule.endswith(scheme):
            return scheme
    return ""


def summarize(records: list[TrialRecord], spec: ExperimentSpec) -> SummaryRow:
    """Mean, unbiased-stddev standard error (0 when n = 1), mistake rate."""
    if not records:
        raise ValueError("cannot summarize zero records")
    n = len(records)
    samples = [r.samples for r in records]
    mean = sum(samples) / n
    if n > 1:
        var = sum((x - mean) ** 2 for x in samples) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = 0.0
    mistakes = sum(1 for r in records if not r.correct)
    return SummaryRow(
        suite=spec.suite,
        instance=spec.instance_label or ",".join(f"{p:g}" for p in spec.probs),
        rule=spec.rule,
        scheme=_scheme_of(spec.rule),
        delta=spec.delta,
        n=n,
        mean_samples=mean,
        stderr_samples=stderr,
        mistake_rate=mistakes / n,
    )


def run_experiment(spec: ExperimentSpec) -> tuple[SummaryRow, list[TrialRecord]]:
    instance = DiscreteInstance(spec.probs)
    records = [
        run_mode_estimation(
            instance,
            spec.rule,
            spec.delta,
            derive_stream(spec.master_seed, i),
            check_every=spec.check_every,
        )
        for i in range(spec.replications)
    ]
    return summarize(records, spec), records


SUMMARY_COLUMNS = (
    "suite",
    "instance",
    "rule",
    "scheme",
    "delta",
    "n",
    "mean_samples",
    "stderr_samples",
    "mistake_rate",
)


def write_summary_csv(rows: list[SummaryRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row.suite,
                    row.instance,
                    row.rule,
                    row.scheme,
                    repr(row.delta),
                    row.n,
                    repr(row.mean_samples),
                    repr(row.stderr_samples),
                    repr(row.mistake_rate),
                ]
            )


def write_trials_jsonl(records: list[TrialRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for r in records:
            handle.write(
                json.dumps(
                    {
                        "seed": r.stream_index,
                        "samples": r.samples,
                        "declared": r.declared,
                        "truth": r.truth,
                        "correct": r.correct,
                    }
                )
                + "\n"
            )


def figure1_sweep(
    p1_values=None,
    delta_values=None,
    reps: int = 100,
    master_seed: int = 0,
) -> list[SummaryRow]:
    """Bernoulli-case engine comparison: sweep p1 at fixed delta = 0.01, or
    sweep delta at fixed p1 = 0.65."""
    cells: list[tuple[float, float]] = []
    if p1_values:
        cells.extend((p1, 0.01) for p1 in p1_values)
    if delta_values:
        cells.extend((0.65, d) for d in delta_values)
    if not cells:
        cells = [(p1, 0.01) for p1 in (0.55, 0.6, 0.65, 0.7, 0.8, 0.9)]
    rows = []
    for ci, (p1, delta) in enumerate(cells):
        for ri, rule in enumerate(BERNOULLI_ENGINE_RULES):
            spec = ExperimentSpec(
                probs=(p1, 1.0 - p1),
                rule=rule,
                delta=delta,
                replications=reps,
                master_seed=master_seed + 1_000_003 * (ci * len(BERNOULLI_ENGINE_RULES) + ri),
                suite="figure1",
                instance_label=f"p1={p1:g},delta={delta:g}",
            )
            rows.append(run_experiment(spec)[0])
    return rows


def capped_replications(instance_name: str, reps: int, fast: bool) -> int:
    """fast mode caps the two slow instances (tens of thousands of samples
    per run) at 20 replications; everything else keeps the requested count."""
    return min(reps, 20) if fast and instance_name in ("P5", "P6") else reps


def table1_suite(
    reps: int = 100,
    master_seed: int = 0,
    fast: bool = False,
    instances=None,
) -> list[SummaryRow]:
    """PPR / KL-SN / A1 in 1v1 and 1vr over the six reference instances.

    fast=True caps replications at 20 for the two slow instances (P5, P6).
    """
    names = list(instances) if instances else list(TABLE1_INSTANCES)
    rows = []
    for ni, name in enumerate(names):
        probs = TABLE1_INSTANCES[name]
        cell_reps = capped_replications(name, reps, fast)
        for ri, rule in enumerate(TABLE1_RULES):
            spec = ExperimentSpec(
                probs=probs,
                rule=rule,
                delta=0.01,
                replications=cell_reps,
                master_seed=master_seed + 7_000_003 * (ni * len(TABLE1_RULES) + ri),
                suite="table1",
                instance_label=name,
            )
            rows.append(run_experiment(spec)[0])
    return rows
