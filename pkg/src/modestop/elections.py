"""Indirect-election winner forecasting by constituency sampling.

An election instance is a set of constituencies, each holding per-party vote
counts; polling draws voters with replacement from a constituency's
normalized counts. Every constituency runs its own mode-estimation stopping
rule at mistake probability delta / C, and the overall winner is declared as
soon as one party's guaranteed seat count (wins) exceeds every rival's
possible seat count (C - losses).

Two polling policies are provided: round-robin over unresolved
constituencies, and the confidence-bound-difference policy that each step
queries one promising constituency for each of the two aggregate contenders.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .bounds import make_engine
from .instances import SeededStream, TallyState
from .stopping import SampleCapExceeded, make_rule, pair_test_alpha

__all__ = [
    "ElectionDataError",
    "Constituency",
    "ElectionInstance",
    "load_election_csv",
    "synthetic_election",
    "write_election_csv",
    "ElectionRecord",
    "ElectionRun",
    "run_election",
    "rr_select",
    "dcb_select",
    "aggregate_check",
    "ELECTION_POLICIES",
]

ELECTION_POLICIES = ("rr", "dcb")

DEFAULT_ELECTION_SAMPLE_CAP = 2_000_000_000


class ElectionDataError(ValueError):
    """Malformed or inconsistent election data."""


@dataclass(frozen=True)
class Constituency:
    cid: str
    votes: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.votes)

    @property
    def winner(self) -> int:
        return max(range(len(self.votes)), key=lambda i: self.votes[i])


@dataclass(frozen=True)
class ElectionInstance:
    parties: tuple[str, ...]
    constituencies: tuple[Constituency, ...]

    def __post_init__(self) -> None:
        if len(self.parties) < 2:
            raise ElectionDataError("an election needs at least two parties")
        if not self.constituencies:
            raise ElectionDataError("an election needs at least one constituency (C = 0)")
        for c in self.constituencies:
            if len(c.votes) != len(self.parties):
                raise ElectionDataError(f"constituency {c.cid} has a vote-length mismatch")
            if c.total <= 0:
                raise ElectionDataError(f"constituency {c.cid} has no votes")
            top = max(c.votes)
            if sum(1 for v in c.votes if v == top) != 1:
                raise ElectionDataError(f"constituency {c.cid} has a tied winner")

    @property
    def k(self) -> int:
        return len(self.parties)

    @property
    def c(self) -> int:
        return len(self.constituencies)

    @property
    def seat_counts(self) -> tuple[int, ...]:
        seats = [0] * self.k
        for con in self.constituencies:
            seats[con.winner] += 1
        return tuple(seats)

    @property
    def true_winner(self) -> int | None:
        """Index of the strict seat-count winner, None on a tie."""
        seats = self.seat_counts
        top = max(seats)
        winners = [i for i, s in enumerate(seats) if s == top]
        return winners[0] if len(winners) == 1 else None


def load_election_csv(path) -> ElectionInstance:
    """Read `constituency,party,votes` rows; duplicate pairs are summed."""
    parties: list[str] = []
    party_index: dict[str, int] = {}
    order: list[str] = []
    table: dict[str, dict[int, int]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != [
            "constituency",
            "party",
            "votes",
        ]:
            raise ElectionDataError(f"{path}: expected header 'constituency,party,votes'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 3:
                raise ElectionDataError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            cid, party = row[0].strip(), row[1].strip()
            try:
                votes = int(row[2])
            except ValueError as exc:
                raise ElectionDataError(
                    f"{path}:{lineno}: votes must be a non-negative integer, got {row[2]!r}"
                ) from exc
            if votes < 0:
                raise ElectionDataError(f"{path}:{lineno}: negative votes")
            if party not in party_index:
                party_index[party] = len(parties)
                parties.append(party)
            if cid not in table:
                table[cid] = {}
                order.append(cid)
            pidx = party_index[party]
            table[cid][pidx] = table[cid].get(pidx, 0) + votes
    if not order:
        raise ElectionDataError(f"{path}: no constituencies found (C = 0)")
    k = len(parties)
    constituencies = tuple(
        Constituency(cid, tuple(table[cid].get(i, 0) for i in range(k))) for cid in order
    )
    return ElectionInstance(tuple(parties), constituencies)


def write_election_csv(instance: ElectionInstance, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["constituency", "party", "votes"])
        for con in instance.constituencies:
            for pidx, votes in enumerate(con.votes):
                if votes > 0:
                    writer.writerow([con.cid, instance.parties[pidx], votes])


def synthetic_election() -> ElectionInstance:
    """The bundled 50-constituency, 3-party instance.

    Mirrors the shape of a real parliamentary map: many lopsided seats for
    the leading party, a solid block for the runner-up, a few seats for the
    third party, and a handful of near-tied seats that are expensive to
    resolve but irrelevant to the overall outcome.
    """
    parties = ("alpha", "beta", "gamma")
    rows: list[tuple[int, int, int]] = []
    rows += [(5800 + 17 * i, 2600 - 11 * i, 1600 + 5 * i) for i in range(22)]  # safe alpha
    rows += [(4500 + 13 * i, 3300 - 7 * i, 2200 + 3 * i) for i in range(10)]  # lean alpha
    rows += [(2700 - 9 * i, 5500 + 15 * i, 1800 + 4 * i) for i in range(8)]  # safe beta
    rows += [(3350 + 5 * i, 4100 - 3 * i, 2550 + 2 * i) for i in range(3)]  # lean beta
    rows += [(2400 + 7 * i, 2100 - 5 * i, 5500 + 11 * i) for i in range(3)]  # safe gamma
    rows += [  # near ties, sampling-expensive but irrelevant to the outcome
        (3360, 3340, 3300),
        (3352, 3347, 3301),
        (3349, 3351, 3300),
        (3347, 3351, 3302),
    ]
    constituencies = tuple(
        Constituency(f"c{i:02d}", votes) for i, votes in enumerate(rows)
    )
    return ElectionInstance(parties, constituencies)


def _parse_rule_token(token: str) -> tuple[str, str]:
    """Split a rule token into (engine kind, scheme); md/adaptive are not
    valid per-constituency rules because the DCB formulas need bound widths."""
    for scheme in ("1v1", "1vr"):
        if token.endswith("-" + scheme):
            return token[: -len(scheme) - 1], scheme
    raise ValueError(f"election rules must be <engine>-1v1 or <engine>-1vr, got {token!r}")


class _ConstituencyState:
    __slots__ = (
        "index",
        "cum",
        "true_winner",
        "tally",
        "rule",
        "winner",
        "pair_lcb",
        "pair_ucb",
        "value_los",
        "value_his",
    )

    def __init__(self, index: int, con: Constituency, rule_token: str, delta_c: float) -> None:
        k = len(con.votes)
        self.index = index
        cum = np.cumsum(np.asarray(con.votes, dtype=np.float64))
        cum /= cum[-1]
        cum[-1] = 1.0
        self.cum = cum
        self.true_winner = con.winner
        self.tally = TallyState(k)
        self.rule = make_rule(rule_token, k, delta_c)
        self.winner: int | None = None
        self.pair_lcb: np.ndarray | None = None
        self.pair_ucb: np.ndarray | None = None
        self.value_los: np.ndarray | None = None
        self.value_his: np.ndarray | None = None

    def leader(self) -> int | None:
        return self.tally.first if self.tally.total > 0 else None


class ElectionRun:
    """Mutable state of one election simulation.

    Vote samples are drawn with replacement from each constituency's
    normalized counts. wins / losses move only when a constituency resolves:
    the resolved winner gains a win and every other party a loss, so
    LCB_party = wins and UCB_party = C - losses. leads counts unresolved
    constituencies where a party is currently the most sampled (lowest index
    on ties).
    """

    def __init__(
        self,
        instance: ElectionInstance,
        policy: str,
        rule_token: str,
        delta: float,
        batch: int,
        stream: SeededStream,
    ) -> None:
        if policy not in ELECTION_POLICIES:
            raise ValueError(f"unknown policy {policy!r}; expected one of {ELECTION_POLICIES}")
        if batch < 1:
            raise ValueError("batch size must be >= 1")
        engine_kind, scheme = _parse_rule_token(rule_token)
        self.instance = instance
        self.policy = policy
        self.scheme = scheme
        self.batch = batch
        self.stream = stream
        self.k = instance.k
        self.c = instance.c
        delta_c = delta / self.c
        self.states = [
            _ConstituencyState(i, con, rule_token, delta_c)
            for i, con in enumerate(instance.constituencies)
        ]
        if scheme == "1v1":
            self.width_engine = make_engine(
                engine_kind, pair_test_alpha(engine_kind, self.k, delta_c)
            )
        else:
            self.width_engine = make_engine(engine_kind, delta_c / self.k)
        self.wins = [0] * self.k
        self.losses = [0] * self.k
        self.leads = [0] * self.k
        self.samples = 0
        self.unresolved = self.c
        self._rr_cursor = 0
        self._needs_widths = policy == "dcb"
        if self._needs_widths:
            for st in self.states:
                self._refresh_widths(st)

    # -- per-constituency bookkeeping -------------------------------------

    def _refresh_widths(self, st: _ConstituencyState) -> None:
        counts = st.tally.counts
        k = self.k
        engine = self.width_engine
        if self.scheme == "1v1":
            lcb = np.zeros((k, k))
            ucb = np.ones((k, k))
            for i in range(k):
                for j in range(k):
                    if i != j:
                        iv = engine.interval(counts[i], counts[i] + counts[j])
                        lcb[i, j] = iv.lo
                        ucb[i, j] = iv.hi
            st.pair_lcb = lcb
            st.pair_ucb = ucb
        else:
            t = st.tally.total
            los = np.empty(k)
            his = np.empty(k)
            for i in range(k):
                iv = engine.interval(counts[i], t)
                los[i] = iv.lo
                his[i] = iv.hi
            st.value_los = los
            st.value_his = his

    def _sample_batch(self, st: _ConstituencyState) -> None:
        old_leader = st.leader()
        us = self.stream.uniforms(self.batch)
        idxs = np.searchsorted(st.cum, us, side="right")
        st.tally.add_counts(np.bincount(idxs, minlength=self.k))
        self.samples += self.batch
        declared = st.rule.check(st.tally)
        if declared is not None:
            st.winner = declared
            self.unresolved -= 1
            if old_leader is not None:
                self.leads[old_leader] -= 1
            self.wins[declared] += 1
            for j in range(self.k):
                if j != declared:
                    self.losses[j] += 1
        else:
            new_leader = st.leader()
            if new_leader != old_leader:
                if old_leader is not None:
                    self.leads[old_leader] -= 1
                if new_leader is not None:
                    self.leads[new_leader] += 1
            if self._needs_widths:
                self._refresh_widths(st)

    # -- selection policies ------------------------------------------------

    def rr_select(self) -> int:
        """Next unresolved constituency in id order, continuing the cycle."""
        if self.unresolved == 0:
            raise SampleCapExceeded("round-robin selection with every constituency resolved")
        n = self.c
        for _ in range(n):
            st = self.states[self._rr_cursor % n]
            self._rr_cursor += 1
            if st.winner is None:
                return st.index
        raise AssertionError("unreachable: unresolved count out of sync")

    def _dcb_score(self, st: _ConstituencyState, party: int, kind: str) -> float:
        k = self.k
        if self.scheme == "1v1":
            lcb, ucb = st.pair_lcb, st.pair_ucb
            if kind == "c1":
                return min(ucb[party, j] - lcb[j, party] for j in range(k) if j != party)
            return max(ucb[j, party] - lcb[party, j] for j in range(k) if j != party)
        los, his = st.value_los, st.value_his
        if kind == "c1":
            return min(his[party] - los[j] for j in range(k) if j != party)
        return max(his[j] - los[party] for j in range(k) if j != party)

    def dcb_contenders(self) -> tuple[int, int]:
        k = self.k
        a = max(range(k), key=lambda i: (self.wins[i] + self.leads[i], -i))
        b = max((i for i in range(k) if i != a), key=lambda i: (self.c - self.losses[i], -i))
        return a, b

    def dcb_select(self) -> tuple[int, int]:
        """One promising constituency for each aggregate contender.

        Ties break toward the lowest constituency id; a contender with no
        unresolved constituency falls back to round-robin for its slot.
        """
        a, b = self.dcb_contenders()
        picks: list[int] = []
        for party, kind in ((a, "c1"), (b, "c2")):
            best, best_score = None, -math.inf
            for st in self.states:
                if st.winner is not None:
                    continue
                score = self._dcb_score(st, party, kind)
                if score > best_score:
                    best, best_score = st.index, score
            picks.append(best if best is not None else self.rr_select())
        return picks[0], picks[1]

    # -- aggregate ----------------------------------------------------------

    def aggregate_check(self) -> int | None:
        """Declare party i once wins_i > C - losses_j for every rival j."""
        c = self.c
        for i in range(self.k):
            wi = self.wins[i]
            if all(wi > c - self.losses[j] for j in range(self.k) if j != i):
                return i
        return None

    def step(self) -> int | None:
        if self.policy == "rr":
            self._sample_batch(self.states[self.rr_select()])
        else:
            c1, c2 = self.dcb_select()
            self._sample_batch(self.states[c1])
            if self.states[c2].winner is None:  # c1's batch may have resolved it
                self._sample_batch(self.states[c2])
        return self.aggregate_check()


@dataclass(frozen=True)
class ElectionRecord:
    samples: int
    winner: str
    seats_resolved: int
    correct: bool


def rr_select(run: ElectionRun) -> int:
    return run.rr_select()


def dcb_select(run: ElectionRun) -> tuple[int, int]:
    return run.dcb_select()


def aggregate_check(run: ElectionRun) -> int | None:
    return run.aggregate_check()


def run_election(
    instance: ElectionInstance,
    policy: str,
    rule_token: str,
    delta: float,
    batch: int,
    stream: SeededStream,
    sample_cap: int = DEFAULT_ELECTION_SAMPLE_CAP,
) -> ElectionRecord:
    run = ElectionRun(instance, policy, rule_token, delta, batch, stream)
    while True:
        winner = run.step()
        if winner is not None:
            return ElectionRecord(
                samples=run.samples,
                winner=instance.parties[winner],
                seats_resolved=sum(run.wins),
                correct=winner == instance.true_winner,
            )
        if run.samples >= sample_cap:
            raise SampleCapExceeded(
                f"election under policy {policy}/{rule_token} exceeded {sample_cap} samples"
            )
