"""Seeded experiment sweeps over policies, written out as CSV."""
from __future__ import annotations

import csv
import io
import logging
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .agents import SimulatedAgent, TrueValuation, generate_bids, instance_hash, load_instance, save_instance
from .core import ElicitationState, solve
from .oracle import brute_force_optimal
from .policies import BOUND_POLICIES, CANDIDATE_POLICIES, PolicyConfig, make_policy
from .rank_lattice import find_optimal

log = logging.getLogger(__name__)

ALL_POLICIES = ("rank-lattice",) + CANDIDATE_POLICIES

COLUMNS = [
    "policy", "n", "k", "seed", "instance", "value_q", "rank_q", "order_q", "bound_q",
    "bound_cost", "total_cost", "baseline", "ratio", "oracle_welfare", "welfare",
]


class WelfareMismatchError(RuntimeError):
    """An elicitation run returned a suboptimal allocation."""


@dataclass
class ExperimentConfig:
    """One sweep: a grid of (n, k) points, ``runs`` instances per point, every policy on each."""

    sweep: str = "items"
    policies: Sequence[str] = ("allocatable-random",)
    runs: int = 10
    seed: int = 0
    order_cost: float = 0.1
    hint: float = 0.2
    samples: int = 10
    kmin: int = 2
    kmax: int = 10
    nmin: int = 2
    nmax: int = 8
    points: Sequence[tuple[int, int]] = ()
    strict: bool = False
    asymmetric: bool = False
    timing: bool = False
    save_instances: str | None = None
    load_instances: str | None = None
    policy_config: PolicyConfig = field(init=False)

    def __post_init__(self):
        unknown = [p for p in self.policies if p not in ALL_POLICIES]
        if unknown:
            raise ValueError(f"unknown policies {unknown}; choose from {list(ALL_POLICIES)}")
        if self.sweep not in ("items", "agents", "custom"):
            raise ValueError(f"unknown sweep {self.sweep!r}")
        if self.runs < 1:
            raise ValueError("runs must be positive")
        self.policy_config = PolicyConfig(
            order_cost=self.order_cost, hint=self.hint, samples=self.samples,
            asymmetric=self.asymmetric, seed=self.seed,
        )

    def grid(self) -> list[tuple[int, int]]:
        if self.sweep == "items":
            return [(2, k) for k in range(self.kmin, self.kmax + 1)]
        if self.sweep == "agents":
            return [(n, 4) for n in range(self.nmin, self.nmax + 1)]
        return [tuple(p) for p in self.points]


def instance_seed(base: int, n: int, k: int, run: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base, n, k, run])


def make_instance(base: int, n: int, k: int, run: int) -> list[TrueValuation]:
    rng = np.random.default_rng(instance_seed(base, n, k, run))
    return [generate_bids(k, rng) for _ in range(n)]


def policy_rng(base: int, n: int, k: int, run: int, policy: str) -> np.random.Generator:
    return np.random.default_rng([base, n, k, run, zlib.crc32(policy.encode())])


def full_revelation(policy: str, n: int, k: int) -> int:
    per = n * ((1 << k) - 1)
    return 2 * per if policy in BOUND_POLICIES else per


def run_policy(
    policy: str,
    valuations: Sequence[TrueValuation],
    config: PolicyConfig | None = None,
    rng=None,
    strict: bool = False,
    monitor=None,
):
    """Run one policy on one instance; returns the solve or rank-lattice result."""
    config = config or PolicyConfig()
    agents = [
        SimulatedAgent(v, order_cost=config.order_cost, asymmetric=config.asymmetric)
        for v in valuations
    ]
    if policy == "rank-lattice":
        return find_optimal(agents, monitor=monitor)
    state = ElicitationState(len(valuations), valuations[0].k, strict=strict, order_cost=config.order_cost)
    return solve(state, make_policy(policy, config, rng), agents, monitor=monitor)


def _row(policy, n, k, run, inst, result, oracle_w, elapsed, timing) -> dict:
    led = result.ledger
    baseline = full_revelation(policy, n, k)
    if policy == "rank-lattice":
        total = float(led.rank)
    else:
        total = float(led.total_cost)
    row = {
        "policy": policy, "n": n, "k": k, "seed": run, "instance": inst,
        "value_q": led.value, "rank_q": led.rank, "order_q": led.order, "bound_q": led.bound,
        "bound_cost": round(led.bound_time, 6), "total_cost": round(total, 6),
        "baseline": baseline, "ratio": round(total / baseline, 6),
        "oracle_welfare": oracle_w, "welfare": int(result.welfare),
    }
    if timing:
        row["wall_time"] = round(elapsed, 4)
    return row


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """Every policy on the same instances at every grid point; rows in grid/run/policy order.

    Raises ``WelfareMismatchError`` if any run misses the optimum.
    """
    rows = []
    for n, k in config.grid():
        for run in range(config.runs):
            valuations = _instance(config, n, k, run)
            inst = instance_hash(valuations)
            _, oracle_w = brute_force_optimal(valuations)
            for policy in config.policies:
                t0 = time.perf_counter()
                result = run_policy(
                    policy, valuations, config.policy_config,
                    policy_rng(config.seed, n, k, run, policy), strict=config.strict,
                )
                elapsed = time.perf_counter() - t0
                if result.welfare != oracle_w:
                    raise WelfareMismatchError(
                        f"{policy} at n={n} k={k} run={run}: welfare {result.welfare} != {oracle_w}"
                    )
                rows.append(_row(policy, n, k, run, inst, result, oracle_w, elapsed, config.timing))
                log.info("%s n=%d k=%d run=%d cost=%s", policy, n, k, run, rows[-1]["total_cost"])
    return rows


def _instance(config: ExperimentConfig, n: int, k: int, run: int) -> list[TrueValuation]:
    name = f"n{n}_k{k}_run{run}.txt"
    if config.load_instances:
        return load_instance(Path(config.load_instances) / name)
    valuations = make_instance(config.seed, n, k, run)
    if config.save_instances:
        out = Path(config.save_instances)
        out.mkdir(parents=True, exist_ok=True)
        save_instance(out / name, valuations)
    return valuations


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    columns = COLUMNS + (["wall_time"] if rows and "wall_time" in rows[0] else [])
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def summarize(rows: list[dict]) -> dict[tuple[str, int, int], dict[str, float]]:
    """Mean cost and ratio per (policy, n, k)."""
    groups: dict[tuple[str, int, int], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["policy"], r["n"], r["k"]), []).append(r)
    return {
        key: {
            "mean_cost": float(np.mean([r["total_cost"] for r in rs])),
            "mean_ratio": float(np.mean([r["ratio"] for r in rs])),
            "runs": len(rs),
        }
        for key, rs in groups.items()
    }
