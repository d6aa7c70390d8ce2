"""Hidden valuations, the benchmark generator, and simulated bidders."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bundles import check_item_count, format_bundle, grand_bundle, size
from .network import BoundsNetwork

MAXBID = 10 ** 7
INSTANCE_MAGIC = "prefelicit-instance"
INSTANCE_VERSION = 1


@dataclass(frozen=True)
class TrueValuation:
    """An agent's private value for every bundle, indexed by mask."""

    k: int
    values: tuple[int, ...]

    def __post_init__(self):
        check_item_count(self.k)
        if len(self.values) != 1 << self.k:
            raise ValueError(f"expected {1 << self.k} values for k={self.k}, got {len(self.values)}")
        if self.values[0] != 0:
            raise ValueError("value of the empty bundle must be 0")
        for b, v in enumerate(self.values):
            if not 0 <= v <= MAXBID:
                raise ValueError(f"value {v} of bundle {format_bundle(b)} outside [0, {MAXBID}]")
            for i in range(self.k):
                if b >> i & 1 and self.values[b ^ (1 << i)] > v:
                    raise ValueError(f"free disposal violated at bundle {format_bundle(b)}")

    def __call__(self, b: int) -> int:
        return self.values[b]

    @classmethod
    def from_sequence(cls, values: Sequence[int]) -> "TrueValuation":
        n = len(values)
        k = n.bit_length() - 1
        if n != 1 << k:
            raise ValueError(f"table length {n} is not a power of two")
        return cls(k, tuple(int(v) for v in values))


def instance_hash(valuations: Sequence[TrueValuation]) -> str:
    h = hashlib.sha256()
    for val in valuations:
        h.update(repr((val.k, val.values)).encode())
    return h.hexdigest()[:12]


def generate_bids(k: int, rng: np.random.Generator | int | None = None) -> TrueValuation:
    """Draw a random free-disposal valuation.

    Non-empty bundles are visited in uniformly random order; each gets an
    integer drawn uniformly from its currently proven interval, which is
    then propagated through a fresh constraint network whose grand bundle
    is capped at ``MAXBID``.
    """
    k = check_item_count(k)
    rng = np.random.default_rng(rng)
    net = BoundsNetwork(k, pin_empty=True)
    if k:
        net.tighten_upper(grand_bundle(k), MAXBID)
    values = [0] * (1 << k)
    for b in rng.permutation(np.arange(1, 1 << k)).tolist():
        lo, hi = net.interval(b)
        v = int(rng.integers(int(lo), int(hi) + 1))
        net.set_value(b, v)
        values[b] = v
    return TrueValuation(k, tuple(values))


def two_item_example() -> list[TrueValuation]:
    """Two agents, items A (bit 0) and B (bit 1)."""
    return [
        TrueValuation(2, (0, 4, 3, 8)),
        TrueValuation(2, (0, 1, 6, 9)),
    ]


@dataclass
class Ledger:
    """Query counts by type and the resulting elicitation cost."""

    order_cost: float = 0.1
    value: int = 0
    rank: int = 0
    order: int = 0
    bound: int = 0
    bound_time: float = 0.0

    @property
    def total_cost(self) -> float:
        return self.value + self.order * self.order_cost + self.bound_time

    def add(self, other: "Ledger") -> "Ledger":
        self.value += other.value
        self.rank += other.rank
        self.order += other.order
        self.bound += other.bound
        self.bound_time += other.bound_time
        return self

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "rank": self.rank,
            "order": self.order,
            "bound": self.bound,
            "bound_time": self.bound_time,
            "total_cost": self.total_cost,
        }


GREATER, LESS, EQUAL = "a>=b", "b>=a", "both"


def rank_order(truth: TrueValuation) -> list[int]:
    """Bundles from most to least preferred.

    Equal values put larger bundles first, then lower masks, so the grand
    bundle is always first and the empty bundle always last.
    """
    return sorted(range(1 << truth.k), key=lambda b: (-truth.values[b], -size(b), b))


@dataclass
class SimulatedAgent:
    """A truthful bidder that answers value, rank, order and bound queries.

    ``asymmetric`` switches the lower-bound model from ``v * sqrt(d)`` to
    ``v * d``; upper bounds stay ``(2 - sqrt(d)) * v``.
    """

    truth: TrueValuation
    order_cost: float = 0.1
    asymmetric: bool = False
    ledger: Ledger = field(init=False)

    def __post_init__(self):
        self.ledger = Ledger(order_cost=self.order_cost)
        self.rank_order = rank_order(self.truth)
        self._rank_of = {b: r + 1 for r, b in enumerate(self.rank_order)}
        self.d_lower = [0.0] * (1 << self.truth.k)
        self.d_upper = [0.0] * (1 << self.truth.k)

    @property
    def k(self) -> int:
        return self.truth.k

    def answer_value(self, b: int) -> int:
        self.ledger.value += 1
        return self.truth.values[b]

    def answer_rank(self, r: int) -> int:
        if not 1 <= r <= len(self.rank_order):
            raise ValueError(f"rank {r} outside 1..{len(self.rank_order)}")
        self.ledger.rank += 1
        return self.rank_order[r - 1]

    def rank_of(self, b: int) -> int:
        return self._rank_of[b]

    def answer_order(self, a: int, b: int) -> str:
        self.ledger.order += 1
        va, vb = self.truth.values[a], self.truth.values[b]
        if va == vb:
            return EQUAL
        return GREATER if va > vb else LESS

    def answer_bound(self, b: int, side: str, t: float) -> float:
        if not t > 0:
            raise ValueError(f"hint must be positive, got {t}")
        v = self.truth.values[b]
        self.ledger.bound += 1
        self.ledger.bound_time += t
        if side == "lower":
            d = self.d_lower[b] = min(1.0, self.d_lower[b] + t)
            return float(bound_from_time(v, d, "lower", self.asymmetric))
        if side == "upper":
            d = self.d_upper[b] = min(1.0, self.d_upper[b] + t)
            return float(bound_from_time(v, d, "upper", self.asymmetric))
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")


def bound_from_time(v, d, side: str, asymmetric: bool = False):
    """Anytime bound after cumulative time ``d``; accepts scalars or arrays."""
    root = np.sqrt(d)
    if side == "lower":
        return v * d if asymmetric else v * root
    return (2.0 - root) * v


class InstanceFormatError(ValueError):
    pass


def save_instance(path, valuations: Sequence[TrueValuation]) -> None:
    """Write valuations as text: magic/version line, ``k``, ``n``, one row per agent."""
    if not valuations:
        raise ValueError("need at least one agent")
    k = valuations[0].k
    lines = [f"{INSTANCE_MAGIC} {INSTANCE_VERSION}", f"k {k}", f"n {len(valuations)}"]
    for val in valuations:
        if val.k != k:
            raise ValueError("all agents must share k")
        lines.append(" ".join(str(v) for v in val.values))
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path) -> list[TrueValuation]:
    text = Path(path).read_text()
    lines = text.splitlines()

    def line(i: int) -> str:
        if i >= len(lines):
            raise InstanceFormatError(f"{path}: line {i + 1}: unexpected end of file")
        return lines[i]

    head = line(0).split()
    if len(head) != 2 or head[0] != INSTANCE_MAGIC:
        raise InstanceFormatError(f"{path}: line 1: missing '{INSTANCE_MAGIC}' header")
    if head[1] != str(INSTANCE_VERSION):
        raise InstanceFormatError(f"{path}: line 1: unsupported version {head[1]}")
    k = _keyed_int(line(1), "k", path, 2)
    n = _keyed_int(line(2), "n", path, 3)
    out = []
    for a in range(n):
        lineno = 4 + a
        fields = line(3 + a).split()
        if len(fields) != 1 << k:
            raise InstanceFormatError(
                f"{path}: line {lineno}: expected {1 << k} values for k={k}, got {len(fields)}"
            )
        try:
            values = tuple(int(x) for x in fields)
        except ValueError as exc:
            raise InstanceFormatError(f"{path}: line {lineno}: {exc}") from None
        try:
            out.append(TrueValuation(k, values))
        except ValueError as exc:
            raise InstanceFormatError(f"{path}: line {lineno}: {exc}") from None
    if any(s.strip() for s in lines[3 + n:]):
        raise InstanceFormatError(f"{path}: line {4 + n}: trailing data after {n} agents")
    return out


def _keyed_int(text: str, key: str, path, lineno: int) -> int:
    parts = text.split()
    if len(parts) != 2 or parts[0] != key:
        raise InstanceFormatError(f"{path}: line {lineno}: expected '{key} <int>'")
    try:
        return int(parts[1])
    except ValueError:
        raise InstanceFormatError(f"{path}: line {lineno}: bad integer {parts[1]!r}") from None
