"""Lovasz extension of a set function on the hypercube [0, 1]^n."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .setfunctions import SetFunction


def as_point(x, n: int | None = None) -> np.ndarray:
    """Validate ``x`` as a point of the unit hypercube and return it as a float array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("point must be a non-empty 1-d vector")
    if n is not None and x.size != n:
        raise ValueError(f"point has dimension {x.size}, expected {n}")
    if not (x.min() >= 0.0 and x.max() <= 1.0):
        raise ValueError("point has coordinates outside [0, 1]")
    return x


def diameter(n: int) -> float:
    """Euclidean diameter of [0, 1]^n."""
    return math.sqrt(n)


def indicator(mask: int, n: int) -> np.ndarray:
    return ((mask >> np.arange(n)) & 1).astype(np.float64)


@dataclass(frozen=True)
class ChainDecomposition:
    """Maximal chain ``chain[0] = {} < chain[1] < ... < chain[n] = [n]`` with weights.

    ``order[k]`` is the element added at step ``k + 1``; ``pi[i]`` is the
    1-based chain position of element ``i`` so ``chain[pi[i]] = chain[pi[i] - 1] | {i}``.
    ``sum_k weights[k] * indicator(chain[k]) == x``.
    """

    order: np.ndarray
    pi: np.ndarray
    chain: tuple[int, ...]
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.order.size


def chain_decompose(x) -> ChainDecomposition:
    """Sort coordinates in nonincreasing order, ties by ascending index."""
    x = as_point(x)
    n = x.size
    order = np.argsort(-x, kind="stable")
    s = x[order]
    weights = np.empty(n + 1)
    weights[0] = 1.0 - s[0]
    weights[1:n] = s[:-1] - s[1:]
    weights[n] = s[-1]
    pi = np.empty(n, dtype=np.int64)
    pi[order] = np.arange(1, n + 1)
    chain = [0]
    for i in order.tolist():
        chain.append(chain[-1] | (1 << i))
    return ChainDecomposition(order=order, pi=pi, chain=tuple(chain), weights=weights)


def chain_values(f: SetFunction, chain: ChainDecomposition) -> np.ndarray:
    if chain.n != f.n:
        raise ValueError(f"point has dimension {chain.n}, function has n={f.n}")
    return np.array([f(b) for b in chain.chain])


def extension_value(f: SetFunction, x) -> float:
    chain = chain_decompose(x)
    return float(chain.weights @ chain_values(f, chain))


def extension_subgradient(f: SetFunction, x) -> np.ndarray:
    """Subgradient ``g[i] = f(B_pi(i)) - f(B_pi(i)-1)`` on the canonical chain."""
    chain = chain_decompose(x)
    vals = chain_values(f, chain)
    g = np.empty(chain.n)
    g[chain.order] = np.diff(vals)
    return g


def sample_level_set(x, rng: np.random.Generator) -> int:
    """Threshold ``x`` at ``tau ~ U[0, 1)``; returns the mask of ``{i : x[i] > tau}``."""
    x = np.asarray(x, dtype=np.float64)
    tau = rng.random()
    above = np.flatnonzero(x > tau)
    return int(np.sum(1 << above)) if above.size else 0


def _check_h(H: float) -> float:
    if H < 0:
        raise ValueError(f"regularization H must be nonnegative, got {H}")
    return float(H)


def regularized_value(f: SetFunction, x, H: float) -> float:
    """``extension_value(f, x) + (H / 2) * ||x||^2``."""
    H = _check_h(H)
    x = as_point(x, f.n)
    return extension_value(f, x) + 0.5 * H * float(x @ x)


def regularized_subgradient(f: SetFunction, x, H: float) -> np.ndarray:
    H = _check_h(H)
    x = as_point(x, f.n)
    return extension_subgradient(f, x) + H * x
