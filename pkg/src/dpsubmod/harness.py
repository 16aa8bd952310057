"""Regret accounting: hindsight optimum, traces, experiment runner, slope fits."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .adversaries import Adversary
from .learners import BanditLearner, FullInfoLearner, bandit_params, full_info_params
from .setfunctions import MAX_EXHAUSTIVE_N, SetFunction

log = logging.getLogger(__name__)

TRACE_SCHEMA = "dpsubmod-trace/1"
TRACE_COLUMNS = ("t", "set_mask", "cost", "cum_cost", "regret")
ALGORITHMS = ("full-info", "bandit")


class HindsightAccumulator:
    """Running ``sum_t f_t(S)`` for every subset ``S``; O(2^n) per added function."""

    def __init__(self, n: int):
        if n > MAX_EXHAUSTIVE_N:
            raise ValueError(f"n={n} exceeds {MAX_EXHAUSTIVE_N}; hindsight enumeration is infeasible")
        self.n = n
        self.totals = np.zeros(1 << n)
        self.count = 0

    def add(self, f: SetFunction) -> None:
        if f.n != self.n:
            raise ValueError(f"function has n={f.n}, accumulator has n={self.n}")
        self.totals += f.table()
        self.count += 1

    def best(self) -> tuple[int, float]:
        """Minimizing mask (smallest on ties) and its total cost."""
        k = int(np.argmin(self.totals))
        return k, float(self.totals[k])


def best_fixed_set(functions: Sequence[SetFunction]) -> tuple[int, float]:
    if not functions:
        return 0, 0.0
    acc = HindsightAccumulator(functions[0].n)
    for f in functions:
        acc.add(f)
    return acc.best()


class CountingOracle:
    """Exposes ``n`` and ``M`` of a function and counts value queries."""

    __slots__ = ("f", "n", "M", "calls")

    def __init__(self, f: SetFunction):
        self.f = f
        self.n = f.n
        self.M = f.M
        self.calls = 0

    def __call__(self, mask: int) -> float:
        self.calls += 1
        return self.f(mask)


@dataclass
class RegretTrace:
    """One run: the set and cost of every round against the final hindsight optimum.

    ``regret[t-1] = cum_cost[t-1] - hindsight_cost``, so the last entry is the
    run's regret and consecutive differences are the per-round costs.
    """

    sets: np.ndarray
    costs: np.ndarray
    hindsight_set: int
    hindsight_cost: float
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def T(self) -> int:
        return int(self.costs.size)

    @property
    def cumulative_cost(self) -> np.ndarray:
        return np.cumsum(self.costs)

    @property
    def regret(self) -> np.ndarray:
        return self.cumulative_cost - self.hindsight_cost

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1]) if self.T else 0.0

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {TRACE_SCHEMA}\n")
        buf.write(f"# hindsight: {json.dumps({'set_mask': self.hindsight_set, 'cost': self.hindsight_cost})}\n")
        buf.write(f"# metadata: {json.dumps(self.metadata, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for t, (s, c, cc, r) in enumerate(zip(self.sets.tolist(), self.costs.tolist(),
                                              self.cumulative_cost.tolist(), self.regret.tolist()), 1):
            writer.writerow((t, s, repr(c), repr(cc), repr(r)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> "RegretTrace":
        header: dict[str, str] = {}
        rows = []
        with open(path, newline="") as fh:
            lines = [ln for ln in fh]
        body = []
        for ln in lines:
            if ln.startswith("# "):
                key, _, value = ln[2:].partition(": ")
                header[key] = value.strip()
            else:
                body.append(ln)
        if header.get("schema") != TRACE_SCHEMA:
            raise ValueError(f"{path}: unsupported trace schema {header.get('schema')!r}")
        reader = csv.DictReader(body)
        for row in reader:
            rows.append((int(row["set_mask"]), float(row["cost"])))
        hind = json.loads(header["hindsight"])
        sets = np.array([r[0] for r in rows], dtype=np.int64)
        costs = np.array([r[1] for r in rows], dtype=np.float64)
        return cls(sets, costs, int(hind["set_mask"]), float(hind["cost"]),
                   json.loads(header.get("metadata", "{}")))


def resolve_params(algorithm: str, n: int, T: int, M: float, epsilon: float,
                   overrides: dict[str, Any] | None = None):
    o = dict(overrides or {})
    if algorithm == "full-info":
        return full_info_params(n, T, M, epsilon, H=o.get("H"), L=o.get("L"),
                                h_scale=o.get("h_scale", 1.0))
    if algorithm == "bandit":
        return bandit_params(n, T, M, epsilon, H=o.get("H"), L=o.get("L"), gamma=o.get("gamma"),
                             h_scale=o.get("h_scale", 1.0), gamma_scale=o.get("gamma_scale", 1.0))
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


def run_trial(adversary: Adversary, algorithm: str, T: int, epsilon: float, seed: int,
              trial: int, overrides: dict[str, Any] | None = None) -> RegretTrace:
    """One replay; deterministic in ``(adversary.seed, seed, trial)``."""
    overrides = dict(overrides or {})
    n, M = adversary.n, adversary.M
    params = resolve_params(algorithm, n, T, M, epsilon, overrides)
    learner_seed = np.random.SeedSequence([seed, trial])
    if algorithm == "full-info":
        learner = FullInfoLearner(params, learner_seed, initial_set=int(overrides.get("s1", 0)))
    else:
        learner = BanditLearner(params, learner_seed, x1=overrides.get("x1"))

    functions = adversary.functions(T, trial)
    acc = HindsightAccumulator(n)
    sets = np.empty(T, dtype=np.int64)
    costs = np.empty(T)
    queries = 0
    for t, f in enumerate(functions):
        if algorithm == "bandit":
            oracle = CountingOracle(f)
            out = learner.step(oracle)
            queries += oracle.calls
        else:
            out = learner.step(f)
        sets[t] = out.chosen_set
        costs[t] = out.cost
        acc.add(f)
    best_set, best_cost = acc.best()
    meta = {
        "library_version": __version__,
        "algorithm": algorithm,
        "T": T,
        "seed": seed,
        "trial": trial,
        "adversary": adversary.describe(),
        "planted_set": adversary.planted_set(trial),
        "params": params.as_dict(),
        "private": not math.isinf(epsilon),
        "noise_mode": "noisy" if not math.isinf(epsilon) else "disabled (NON-PRIVATE)",
        "overrides": {k: (list(v) if isinstance(v, np.ndarray) else v) for k, v in overrides.items()},
    }
    if algorithm == "bandit":
        meta["oracle_queries"] = queries
        meta["tree_calibration_note"] = (
            "tree norm bound is 2M(n+1)/gamma + H*sqrt(n), the true worst case of the streamed "
            "vectors; L is kept only as the analysis constant")
    return RegretTrace(sets, costs, best_set, best_cost, meta)


def run_experiment(adversary: Adversary, algorithm: str, T: int, *, epsilon: float = 1.0,
                   trials: int = 20, seed: int = 0,
                   overrides: dict[str, Any] | None = None) -> list[RegretTrace]:
    if trials < 1:
        raise ValueError(f"trials must be positive, got {trials}")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    return [run_trial(adversary, algorithm, T, epsilon, seed, k, overrides) for k in range(trials)]


def mean_final_regret(traces: Iterable[RegretTrace]) -> float:
    return float(np.mean([tr.final_regret for tr in traces]))


class UndefinedSlope(ValueError):
    """The log-log fit needs strictly positive mean regrets."""


def fit_regret_slope(horizons: Sequence[float], mean_regrets: Sequence[float]) -> float:
    """Least-squares slope of ``log(mean regret)`` against ``log T``."""
    h = np.asarray(horizons, dtype=np.float64)
    r = np.asarray(mean_regrets, dtype=np.float64)
    if h.shape != r.shape or h.ndim != 1:
        raise ValueError("horizons and regrets must be 1-d and of equal length")
    if h.size < 2:
        raise ValueError("need at least two horizons to fit a slope")
    if h.size < 4:
        log.warning("fitting a regret exponent from only %d horizons", h.size)
    if np.any(h <= 0) or np.any(np.diff(h) <= 0):
        raise ValueError("horizons must be positive and increasing")
    if np.any(r <= 0):
        raise UndefinedSlope(f"nonpositive mean regret at horizons {h[r <= 0].astype(int).tolist()}")
    slope, _ = np.polyfit(np.log(h), np.log(r), 1)
    return float(slope)
