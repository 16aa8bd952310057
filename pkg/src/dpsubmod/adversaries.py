"""Oblivious adversaries: seeded generators of submodular function sequences."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .setfunctions import SetFunction, function_from_record, membership_matrix

KINDS = ("stochastic-fixed-optimum", "random-cut-stream", "switching", "explicit-sequence")


def planted_tables(n: int, M: float, T: int, planted: int, rng: np.random.Generator, *,
                   margin: float = 1.0, spread: float = 0.5, cut_scale: float = 0.5) -> np.ndarray:
    """``T`` value tables of modular-plus-cut functions minimized at ``planted``.

    Element ``i`` gets weight ``-(margin + u)`` if it is in ``planted`` and
    ``+(margin + u)`` otherwise, ``u ~ U[-spread, spread]``.  Cut edges join
    elements on the same side of ``planted`` so the cut vanishes there.  With
    ``spread < margin`` every round is minimized at ``planted``.  Each table is
    then shifted and scaled to span exactly ``[-M, M]``; both operations
    preserve submodularity and the minimizer.
    """
    memb = membership_matrix(n)
    side = (planted >> np.arange(n)) & 1
    sign = np.where(side == 1, -1.0, 1.0)
    w = sign * (margin + rng.uniform(-spread, spread, size=(T, n)))
    tabs = w @ memb.T
    same = [(i, j) for i in range(n) for j in range(i + 1, n) if side[i] == side[j]]
    if same and cut_scale > 0:
        cross = np.stack([memb[:, i] != memb[:, j] for i, j in same], axis=1).astype(np.float64)
        tabs += rng.uniform(0.0, cut_scale, size=(T, len(same))) @ cross.T
    hi = tabs.max(axis=1, keepdims=True)
    lo = tabs.min(axis=1, keepdims=True)
    width = np.where(hi > lo, hi - lo, 1.0)
    return np.clip((tabs - 0.5 * (hi + lo)) * (2.0 * M / width), -M, M)


def random_cut_tables(n: int, M: float, T: int, rng: np.random.Generator) -> np.ndarray:
    """Cuts of the complete graph with U[0, 1] weights rescaled to total ``M``."""
    memb = membership_matrix(n)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        return np.zeros((T, 1 << n))
    cross = np.stack([memb[:, i] != memb[:, j] for i, j in pairs], axis=1).astype(np.float64)
    w = rng.uniform(0.0, 1.0, size=(T, len(pairs)))
    w *= M / w.sum(axis=1, keepdims=True)
    return np.minimum(w @ cross.T, M)


@dataclass(frozen=True)
class Adversary:
    """An oblivious function-sequence generator.

    The sequence for a given ``(T, trial)`` depends only on ``seed``, so it is
    fixed before any learner plays.  Recognised ``params`` per kind:

    * stochastic-fixed-optimum: ``planted`` (mask, default random), ``margin``,
      ``spread``, ``cut_scale``
    * random-cut-stream: none
    * switching: ``period`` (default 64), ``planted`` for the first bank; the
      second bank is planted at its complement
    * explicit-sequence: ``functions`` (fixture records or SetFunctions), cycled
    """

    kind: str
    n: int
    M: float = 1.0
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.n < 1 or self.n > 16:
            raise ValueError(f"adversaries support 1 <= n <= 16, got {self.n}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")

    def rng(self, trial: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, trial, 0xAD]))

    def planted_set(self, trial: int = 0) -> int | None:
        if self.kind not in ("stochastic-fixed-optimum", "switching"):
            return None
        if "planted" in self.params:
            return int(self.params["planted"])
        return int(self.rng(trial).integers(0, 1 << self.n))

    def functions(self, T: int, trial: int = 0) -> list[SetFunction]:
        n, M = self.n, self.M
        if self.kind == "explicit-sequence":
            fs = [f if isinstance(f, SetFunction) else function_from_record(f)
                  for f in self.params["functions"]]
            if not fs:
                raise ValueError("explicit sequence is empty")
            for f in fs:
                if f.n != n or f.M > M:
                    raise ValueError(f"sequence function {f!r} does not fit n={n}, M={M}")
            return [fs[t % len(fs)] for t in range(T)]

        rng = self.rng(trial)
        shape = {k: float(self.params[k]) for k in ("margin", "spread", "cut_scale") if k in self.params}
        if self.kind == "stochastic-fixed-optimum":
            planted = self.planted_set(trial)
            rng.integers(0, 1 << n)  # keep the stream aligned whether or not planted is given
            tabs = planted_tables(n, M, T, planted, rng, **shape)
        elif self.kind == "random-cut-stream":
            tabs = random_cut_tables(n, M, T, rng)
        else:
            planted = self.planted_set(trial)
            rng.integers(0, 1 << n)
            period = int(self.params.get("period", 64))
            if period < 1:
                raise ValueError(f"switching period must be positive, got {period}")
            a = planted_tables(n, M, T, planted, rng, **shape)
            b = planted_tables(n, M, T, planted ^ ((1 << n) - 1), rng, **shape)
            use_b = (np.arange(T) // period) % 2 == 1
            tabs = np.where(use_b[:, None], b, a)
        return [SetFunction(n, M, table=row, name=self.kind) for row in tabs]

    def describe(self) -> dict[str, Any]:
        params = {k: v for k, v in self.params.items() if k != "functions"}
        if "functions" in self.params:
            params["functions"] = len(self.params["functions"])
        return {"kind": self.kind, "n": self.n, "M": self.M, "seed": self.seed, "params": params}
