"""Problem instances, seeded sampling streams, and O(1) tally maintenance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiscreteInstance",
    "TallyState",
    "PairTally",
    "SeededStream",
    "derive_stream",
    "sample",
    "first_second_scan",
    "SamplePath",
]


@dataclass(frozen=True)
class DiscreteInstance:
    """A K-valued distribution with a strictly unique mode.

    probs must sum to 1 within 1e-9 and contain a strict maximum; exact ties
    for the top probability are rejected because no stopping rule is
    guaranteed to terminate on them.
    """

    probs: tuple[float, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.probs) < 2:
            raise ValueError("an instance needs K >= 2 values")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ValueError(f"probabilities must lie in [0, 1]: {self.probs}")
        total = sum(self.probs)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {total}")
        top = max(self.probs)
        if sum(1 for p in self.probs if p == top) != 1:
            raise ValueError("the mode must be strictly unique")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"v{i}" for i in range(len(self.probs))))
        elif len(self.labels) != len(self.probs):
            raise ValueError("labels and probs must have equal length")
        cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        cum[-1] = 1.0
        object.__setattr__(self, "_cumulative", cum)

    @property
    def k(self) -> int:
        return len(self.probs)

    @property
    def true_mode(self) -> int:
        return max(range(self.k), key=lambda i: self.probs[i])

    @property
    def cumulative(self) -> np.ndarray:
        return self._cumulative  # type: ignore[attr-defined]

    @staticmethod
    def from_string(text: str) -> "DiscreteInstance":
        """Parse a comma-separated probability list, e.g. '0.5,0.25,0.25'."""
        try:
            probs = tuple(float(tok) for tok in text.split(",") if tok.strip())
        except ValueError as exc:
            raise ValueError(f"could not parse probability list {text!r}") from exc
        return DiscreteInstance(probs)


class SeededStream:
    """A reproducible uniform stream: (master_seed, *indices) -> PCG64.

    The derivation rule is fixed for the whole repository: the seed material
    is the tuple (master_seed, index...) fed to numpy's SeedSequence, and all
    draws consume one double each from the resulting PCG64 bit stream, so
    chunked and scalar consumption produce identical sequences.
    """

    __slots__ = ("master_seed", "indices", "generator")

    def __init__(self, master_seed: int, *indices: int) -> None:
        self.master_seed = int(master_seed)
        self.indices = tuple(int(i) for i in indices)
        seq = np.random.SeedSequence((self.master_seed & 0xFFFFFFFFFFFFFFFF, *self.indices))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    @property
    def stream_index(self) -> int:
        return self.indices[0] if self.indices else 0

    def uniform(self) -> float:
        return float(self.generator.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self.generator.random(n)


def derive_stream(master_seed: int, *indices: int) -> SeededStream:
    """Deterministic stream for a (master seed, index...) coordinate."""
    return SeededStream(master_seed, *indices)


def sample(instance: DiscreteInstance, stream: SeededStream) -> int:
    """One inverse-CDF draw: the smallest index i with u < cumulative[i]."""
    u = stream.uniform()
    return int(np.searchsorted(instance.cumulative, u, side="right"))


class SamplePath:
    """Lazily materialized i.i.d. sample path from one instance and stream.

    Shared across stopping rules when per-run comparisons need the exact
    same sample sequence.
    """

    __slots__ = ("_cum", "_stream", "_chunk", "_values")

    def __init__(self, instance: DiscreteInstance, stream: SeededStream, chunk: int = 1024) -> None:
        self._cum = instance.cumulative
        self._stream = stream
        self._chunk = chunk
        self._values: list[int] = []

    def __getitem__(self, t: int) -> int:
        values = self._values
        while t >= len(values):
            us = self._stream.uniforms(self._chunk)
            values.extend(np.searchsorted(self._cum, us, side="right").tolist())
        return values[t]

    def materialized(self) -> int:
        return len(self._values)


def first_second_scan(counts) -> tuple[int, int]:
    """Full-scan reference for (first, second) with lowest-index tie-break."""
    first = 0
    for i in range(1, len(counts)):
        if counts[i] > counts[first]:
            first = i
    second = 0 if first != 0 else 1
    for i in range(len(counts)):
        if i != first and counts[i] > counts[second]:
            second = i
    return first, second


@dataclass
class PairTally:
    """Win counts for one ordered pair of values."""

    wins_i: int = 0
    wins_j: int = 0

    @property
    def pair_total(self) -> int:
        return self.wins_i + self.wins_j


class TallyState:
    """Per-value counts with first/second maintained in O(1) per update.

    Ties are broken toward the lowest index, deterministically: first is the
    lowest-index maximum, second the lowest-index maximum of the rest. When
    counts[first] == counts[second] the invariant first < second holds, which
    the constant-time update relies on.
    """

    __slots__ = ("counts", "total", "first", "second")

    def __init__(self, k: int) -> None:
        if k < 2:
            raise ValueError("tally needs K >= 2 values")
        self.counts = [0] * k
        self.total = 0
        self.first = 0
        self.second = 1

    @property
    def k(self) -> int:
        return len(self.counts)

    def update(self, idx: int) -> None:
        counts = self.counts
        counts[idx] += 1
        self.total += 1
        first = self.first
        if idx == first:
            return
        c = counts[idx]
        cf = counts[first]
        second = self.second
        if idx == second:
            if c > cf or (c == cf and idx < first):
                self.first, self.second = second, first
            return
        if c > cf or (c == cf and idx < first):
            self.first, self.second = idx, first
        else:
            cs = counts[second]
            if c > cs or (c == cs and idx < second):
                self.second = idx

    def add_counts(self, batch_counts) -> None:
        """Bulk update from per-value counts; first/second by full scan."""
        counts = self.counts
        added = 0
        for i, c in enumerate(batch_counts):
            ci = int(c)
            if ci < 0:
                raise ValueError("batch counts must be non-negative")
            counts[i] += ci
            added += ci
        self.total += added
        self.first, self.second = first_second_scan(counts)
