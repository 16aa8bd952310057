"""Bounded set functions over a ground set {0, ..., n-1}.

Subsets are integer bitmasks: element ``i`` is present iff bit ``i`` is set.
Every generator here returns a :class:`SetFunction` whose declared range bound
``M`` satisfies ``|f(S)| <= M`` for every subset.
"""
from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

MAX_EXHAUSTIVE_N = 16
MAX_TABLE_RECORD_N = 12


def mask_of(elements: Iterable[int]) -> int:
    mask = 0
    for i in elements:
        mask |= 1 << int(i)
    return mask


def elements_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def membership_matrix(n: int) -> np.ndarray:
    """0/1 matrix of shape (2**n, n); row ``S`` is the characteristic vector of ``S``."""
    masks = np.arange(1 << n)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)


class SetFunction:
    """Immutable oracle ``f: 2^[n] -> [-M, M]``.

    Calling the object skips validation and is the fast path used inside the
    learners; :func:`evaluate` is the checked entry point.
    """

    __slots__ = ("n", "M", "name", "_fn", "_table")

    def __init__(
        self,
        n: int,
        M: float,
        fn: Callable[[int], float] | None = None,
        *,
        table: Sequence[float] | np.ndarray | None = None,
        name: str = "",
    ):
        if n < 1:
            raise ValueError(f"ground set size must be positive, got {n}")
        if not M > 0:
            raise ValueError(f"range bound M must be positive, got {M}")
        if (fn is None) == (table is None):
            raise ValueError("give exactly one of fn or table")
        self.n = int(n)
        self.M = float(M)
        self.name = name
        if table is not None:
            arr = np.array(table, dtype=np.float64)
            if arr.shape != (1 << self.n,):
                raise ValueError(f"table must have 2**n = {1 << self.n} entries, got {arr.shape}")
            arr.setflags(write=False)
            self._table = arr
            values = arr.tolist()
            self._fn = values.__getitem__
        else:
            self._table = None
            self._fn = fn

    def __call__(self, mask: int) -> float:
        return self._fn(mask)

    def table(self) -> np.ndarray:
        """All ``2**n`` values indexed by mask (read-only, cached)."""
        if self._table is None:
            if self.n > 20:
                raise ValueError(f"refusing to tabulate a function with n={self.n} > 20")
            arr = np.array([self._fn(s) for s in range(1 << self.n)], dtype=np.float64)
            arr.setflags(write=False)
            self._table = arr
        return self._table

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<SetFunction{label} n={self.n} M={self.M:g}>"


def evaluate(f: SetFunction, S: int) -> float:
    """Checked evaluation of ``f`` at subset mask ``S``."""
    S = int(S)
    if S < 0 or S >> f.n:
        raise ValueError(f"mask {S:#x} has bits outside the ground set of size {f.n}")
    return float(f(S))


class Violation(NamedTuple):
    """Witness that ``f(S+i) + f(S+j) < f(S+i+j) + f(S)``."""

    S: int
    i: int
    j: int
    gap: float


def check_submodular(f: SetFunction, tol: float | None = None) -> tuple[bool, Violation | None]:
    """Exhaustive pairwise second-difference test, O(2^n n^2).

    Returns ``(True, None)`` or ``(False, witness)`` for the first violating
    triple in (i, j, S) order.  ``tol`` defaults to ``1e-10 * M`` to absorb
    rounding in float-valued tables.
    """
    if f.n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"n={f.n} exceeds {MAX_EXHAUSTIVE_N}; too large for exhaustive verification")
    if tol is None:
        tol = 1e-10 * f.M
    tab = f.table()
    masks = np.arange(1 << f.n)
    for i in range(f.n):
        for j in range(i + 1, f.n):
            bi, bj = 1 << i, 1 << j
            base = masks[(masks & (bi | bj)) == 0]
            gap = tab[base | bi] + tab[base | bj] - tab[base | bi | bj] - tab[base]
            bad = np.flatnonzero(gap < -tol)
            if bad.size:
                k = bad[0]
                return False, Violation(int(base[k]), i, j, float(gap[k]))
    return True, None


def check_bounded(f: SetFunction) -> bool:
    if f.n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"n={f.n} exceeds {MAX_EXHAUSTIVE_N}")
    return bool(np.all(np.abs(f.table()) <= f.M))


def make_cut_function(n: int, edges: Iterable[tuple[int, int, float]]) -> SetFunction:
    """Weighted graph cut: total weight of edges with exactly one endpoint in ``S``.

    Edges are ``(i, j, w)`` with ``0 <= i < j < n`` and ``w >= 0``.
    """
    edge_list = []
    for i, j, w in edges:
        i, j, w = int(i), int(j), float(w)
        if not 0 <= i < j < n:
            raise ValueError(f"edge ({i}, {j}) needs 0 <= i < j < {n}")
        if w < 0:
            raise ValueError(f"negative edge weight {w} on ({i}, {j})")
        edge_list.append((i, j, w))
    total = sum(w for _, _, w in edge_list)
    tab = np.zeros(1 << n)
    if n <= 20:
        memb = membership_matrix(n).astype(bool)
        for i, j, w in edge_list:
            tab += w * (memb[:, i] != memb[:, j])
        return SetFunction(n, total if total > 0 else 1.0, table=tab, name="cut")

    def cut(mask: int) -> float:
        return sum(w for i, j, w in edge_list if ((mask >> i) ^ (mask >> j)) & 1)

    return SetFunction(n, total if total > 0 else 1.0, cut, name="cut")


def make_coverage_function(n: int, sets: Sequence[Iterable[Any]], sign: int = 1) -> SetFunction:
    """``sign * |union of sets[i] for i in S|``.

    ``sign=+1`` is monotone submodular.  ``sign=-1`` negates it, which is
    supermodular; it is kept as a negative fixture for :func:`check_submodular`.
    """
    if len(sets) != n:
        raise ValueError(f"need one set per element: got {len(sets)} sets for n={n}")
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    frozen = [frozenset(u) for u in sets]
    universe = frozenset().union(*frozen)
    index = {a: k for k, a in enumerate(sorted(universe, key=repr))}
    bits = [sum(1 << index[a] for a in u) for u in frozen]

    def cover(mask: int) -> float:
        acc = 0
        for i in range(n):
            if mask >> i & 1:
                acc |= bits[i]
        return float(sign * bin(acc).count("1"))

    M = float(len(universe)) if universe else 1.0
    if n <= 20:
        return SetFunction(n, M, table=[cover(s) for s in range(1 << n)], name="coverage")
    return SetFunction(n, M, cover, name="coverage")


def make_modular_function(weights: Sequence[float], offset: float = 0.0) -> SetFunction:
    """``offset + sum of weights[i] over i in S``."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    M = abs(offset) + float(np.abs(w).sum())
    tab = offset + membership_matrix(n) @ w
    return SetFunction(n, M if M > 0 else 1.0, table=tab, name="modular")


def make_table_function(n: int, values: Sequence[float], M: float | None = None) -> SetFunction:
    vals = np.asarray(values, dtype=np.float64)
    peak = float(np.abs(vals).max()) if vals.size else 0.0
    if M is None:
        M = peak if peak > 0 else 1.0
    elif peak > M:
        raise ValueError(f"table value {peak} exceeds declared bound M={M}")
    return SetFunction(n, M, table=vals, name="table")


def random_submodular(n: int, rng: np.random.Generator) -> SetFunction:
    """Random integer-valued submodular function for fixtures.

    A sum of a weighted cut, a coverage function, a truncated cardinality
    and a signed modular term, each present with probability 1/2 (at least
    one always).  ``M`` is the exact maximum of ``|f|``.
    """
    memb = membership_matrix(n)
    card = memb.sum(axis=1)
    tab = np.zeros(1 << n)
    parts = rng.random(4) < 0.5
    if not parts.any():
        parts[rng.integers(4)] = True
    if parts[0]:
        edges = [(i, j, int(rng.integers(0, 4))) for i in range(n) for j in range(i + 1, n)]
        tab += make_cut_function(n, edges).table()
    if parts[1]:
        universe = range(2 * n)
        sets = [[a for a in universe if rng.random() < 0.3] for _ in range(n)]
        tab += make_coverage_function(n, sets).table()
    if parts[2]:
        tab += np.minimum(card, int(rng.integers(1, n + 1)))
    if parts[3]:
        tab += memb @ rng.integers(-3, 4, size=n).astype(np.float64)
    tab -= np.round(tab.mean())
    return make_table_function(n, tab)


# Fixture records

def function_from_record(record: dict[str, Any]) -> SetFunction:
    """Build a function from a fixture record.

    ``{"kind": "cut", "n": 3, "edges": [[0, 1, 1.0], ...]}``
    ``{"kind": "coverage", "n": 2, "sets": [["a"], ["b"]], "sign": 1}``
    ``{"kind": "modular", "weights": [1, -1], "offset": 0}``
    ``{"kind": "explicit-table", "n": 2, "values": [...], "M": 1.0}``
    """
    kind = record.get("kind")
    if kind == "cut":
        return make_cut_function(int(record["n"]), [tuple(e) for e in record.get("edges", [])])
    if kind == "coverage":
        return make_coverage_function(int(record["n"]), record["sets"], int(record.get("sign", 1)))
    if kind == "modular":
        return make_modular_function(record["weights"], float(record.get("offset", 0.0)))
    if kind == "explicit-table":
        n = int(record["n"])
        if n > MAX_TABLE_RECORD_N:
            raise ValueError(f"explicit tables are limited to n <= {MAX_TABLE_RECORD_N}")
        return make_table_function(n, record["values"], record.get("M"))
    raise ValueError(f"unknown function kind {kind!r}")


def function_to_record(f: SetFunction) -> dict[str, Any]:
    if f.n > MAX_TABLE_RECORD_N:
        raise ValueError(f"explicit tables are limited to n <= {MAX_TABLE_RECORD_N}")
    return {"kind": "explicit-table", "n": f.n, "M": f.M, "values": f.table().tolist()}


def load_functions(path: str | Path) -> list[SetFunction]:
    """Read a JSON fixture file holding one record or a list of records."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    return [function_from_record(r) for r in data]
