"""Private follow-the-approximate-leader learners for online submodular minimization.

Both learners keep an iterate ``x_t`` in [0, 1]^n, push a (possibly estimated)
subgradient of the H-regularized Lovasz extension into a
:class:`~dpsubmod.tree.NoisyPrefixSumTree`, and move to the minimizer of
``v_t . x + (H/2) sum_j ||x - x_j||^2`` over the hypercube.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import asdict, dataclass

import numpy as np

from .lovasz import (
    ChainDecomposition,
    as_point,
    chain_decompose,
    extension_subgradient,
    indicator,
    sample_level_set,
)
from .setfunctions import SetFunction
from .tree import NoisyPrefixSumTree

log = logging.getLogger(__name__)


def ftal_argmin(v, sum_x, t: int, H: float) -> np.ndarray:
    """Exact minimizer of ``v.x + (H/2) sum_{j<=t} ||x - x_j||^2`` over [0, 1]^n.

    The objective separates by coordinate, so the answer is the unconstrained
    stationary point ``(sum_x - v/H) / t`` clipped to the box.
    """
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    if t < 1:
        raise ValueError(f"need at least one past iterate, got t={t}")
    return np.clip((np.asarray(sum_x) - np.asarray(v) / H) / t, 0.0, 1.0)


@dataclass(frozen=True)
class LearnerParams:
    """Resolved parameters of one learner run.

    ``L`` is the Lipschitz constant the regret analysis uses; ``tree_norm_bound``
    is the bound the tree's noise is actually calibrated to.  They coincide for
    the full-information learner.  For the bandit learner the streamed vectors
    can be longer than ``L``, so the tree uses their true worst-case norm.
    """

    algorithm: str
    n: int
    T: int
    M: float
    epsilon: float
    H: float
    L: float
    tree_norm_bound: float
    gamma: float | None = None
    gamma_clamped: bool = False

    def as_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(self.epsilon):
            d["epsilon"] = "inf"
        return d


def _check_common(n: int, T: int, M: float, epsilon: float) -> None:
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive (or inf), got {epsilon}")


def full_info_params(n: int, T: int, M: float, epsilon: float, *,
                     H: float | None = None, L: float | None = None,
                     h_scale: float = 1.0) -> LearnerParams:
    """Defaults ``H = h_scale * M / sqrt(n T)`` and ``L = 4M + H sqrt(n)``."""
    _check_common(n, T, M, epsilon)
    if H is None:
        H = h_scale * M / math.sqrt(n * T)
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    stream_bound = 4 * M + H * math.sqrt(n)
    if L is None:
        L = stream_bound
    elif L < stream_bound:
        raise ValueError(f"L={L} is below the worst-case subgradient norm 4M + H*sqrt(n) = {stream_bound}")
    return LearnerParams("full-info", n, T, float(M), float(epsilon), float(H), float(L), float(L))


def bandit_params(n: int, T: int, M: float, epsilon: float, *,
                  H: float | None = None, L: float | None = None,
                  gamma: float | None = None, h_scale: float = 1.0,
                  gamma_scale: float = 1.0) -> LearnerParams:
    """Defaults ``H = M / (sqrt(n) T^(1/4))``, ``gamma = min(n / T^(1/4), 1)``, ``L = 4M + 2H sqrt(n)``.

    The tree is calibrated to ``2M(n+1)/gamma + H sqrt(n)``, the largest norm
    an estimate plus regularizer can reach.
    """
    _check_common(n, T, M, epsilon)
    if H is None:
        H = h_scale * M / (math.sqrt(n) * T ** 0.25)
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    clamped = False
    if gamma is None:
        gamma = gamma_scale * n / T ** 0.25
        if gamma > 1.0:
            log.warning("exploration rate n/T^(1/4) = %.4g exceeds 1; clamped to 1", gamma)
            gamma, clamped = 1.0, True
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if L is None:
        L = 4 * M + 2 * H * math.sqrt(n)
    tree_bound = 2 * M * (n + 1) / gamma + H * math.sqrt(n)
    return LearnerParams("bandit", n, T, float(M), float(epsilon), float(H), float(L),
                         float(tree_bound), float(gamma), clamped)


@dataclass
class RoundOutcome:
    t: int
    chosen_set: int
    cost: float
    iterate: np.ndarray
    gradient: np.ndarray


def _spawn(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    play, noise = ss.spawn(2)
    return np.random.default_rng(play), np.random.default_rng(noise)


class _Learner:
    def __init__(self, params: LearnerParams, x1: np.ndarray, seed=None):
        self.params = params
        self.n, self.T, self.M, self.H = params.n, params.T, params.M, params.H
        self.rng, noise_rng = _spawn(seed)
        self.tree = NoisyPrefixSumTree(params.T, params.n, params.tree_norm_bound,
                                       params.epsilon, noise_rng)
        self.x = as_point(x1, params.n).copy()
        self.sum_x = np.zeros(params.n)
        self.t = 0
        self._range_limit = params.M * (1.0 + 1e-12)

    def _check(self, f) -> None:
        if self.t >= self.T:
            raise RuntimeError(f"learner already played all {self.T} rounds")
        if f.n != self.n:
            raise ValueError(f"function has n={f.n}, learner expects n={self.n}")
        if f.M > self._range_limit:
            raise ValueError(f"function range bound {f.M} exceeds the learner's M={self.M}")

    def _advance(self, g_reg: np.ndarray) -> None:
        v = self.tree.append(g_reg)
        self.sum_x += self.x
        self.t += 1
        self.x = ftal_argmin(v, self.sum_x, self.t, self.H)


class FullInfoLearner(_Learner):
    """Full-information learner: sees all of ``f_t`` after choosing ``S_t``."""

    def __init__(self, params: LearnerParams, seed=None, initial_set: int = 0):
        super().__init__(params, indicator(initial_set, params.n), seed)

    def step(self, f: SetFunction) -> RoundOutcome:
        self._check(f)
        x = self.x
        S = sample_level_set(x, self.rng)
        cost = float(f(S))
        g = extension_subgradient(f, x)
        self._advance(g + self.H * x)
        return RoundOutcome(self.t, S, cost, x, g)


def bandit_sample_set(chain: ChainDecomposition, gamma: float,
                      rng: np.random.Generator) -> tuple[int, int, np.ndarray]:
    """Mix the chain weights with uniform exploration and draw a chain index.

    Returns ``(i, chain.chain[i], rho)`` where ``rho = (1-gamma) mu + gamma/(n+1)``.
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    n = chain.n
    rho = (1.0 - gamma) * chain.weights + gamma / (n + 1)
    i = int(np.searchsorted(np.cumsum(rho), rng.random() * rho.sum(), side="right"))
    i = min(i, n)
    return i, chain.chain[i], rho


def bandit_gradient_estimate(chain: ChainDecomposition, rho: np.ndarray, i: int,
                             f_val: float, xi: int = 1) -> np.ndarray:
    """One-point estimate of the Lovasz subgradient from ``f_val = f(B_i)``.

    The end sets credit the first/last element of the chain with weight
    ``1/rho``; an interior set credits the element entering at step ``i``
    (``xi=+1``) or debits the one entering at step ``i+1`` (``xi=-1``) with
    weight ``2/rho``.
    """
    n = chain.n
    if not 0 <= i <= n:
        raise IndexError(f"chain index {i} outside 0..{n}")
    g = np.zeros(n)
    if i == 0:
        g[chain.order[0]] = -f_val / rho[0]
    elif i == n:
        g[chain.order[n - 1]] = f_val / rho[n]
    elif xi == 1:
        g[chain.order[i - 1]] = 2.0 * f_val / rho[i]
    elif xi == -1:
        g[chain.order[i]] = -2.0 * f_val / rho[i]
    else:
        raise ValueError(f"xi must be +1 or -1, got {xi}")
    return g


Estimator = Callable[[ChainDecomposition, np.ndarray, int, float, int], np.ndarray]


def estimator_outcomes(chain: ChainDecomposition, rho: np.ndarray, values: np.ndarray,
                       estimator: Estimator = bandit_gradient_estimate
                       ) -> Iterator[tuple[float, np.ndarray]]:
    """Every (probability, estimate) pair the bandit step can produce.

    ``values[k]`` is ``f(chain.chain[k])``.  At most ``2n`` outcomes.
    """
    n = chain.n
    for i in range(n + 1):
        if i == 0 or i == n:
            yield float(rho[i]), estimator(chain, rho, i, float(values[i]), 1)
        else:
            for xi in (1, -1):
                yield 0.5 * float(rho[i]), estimator(chain, rho, i, float(values[i]), xi)


class BanditLearner(_Learner):
    """Bandit learner: observes only ``f_t(S_t)`` for the set it plays."""

    def __init__(self, params: LearnerParams, seed=None, x1=None,
                 estimator: Estimator = bandit_gradient_estimate):
        if params.gamma is None:
            raise ValueError("bandit learner needs an exploration rate gamma")
        if x1 is None:
            x1 = np.full(params.n, 0.5)
        super().__init__(params, x1, seed)
        self.gamma = params.gamma
        self.estimator = estimator

    def step(self, f) -> RoundOutcome:
        self._check(f)
        x = self.x
        chain = chain_decompose(x)
        i, S, rho = bandit_sample_set(chain, self.gamma, self.rng)
        cost = float(f(S))
        xi = 1
        if 0 < i < self.n:
            xi = 1 if self.rng.random() < 0.5 else -1
        g_hat = self.estimator(chain, rho, i, cost, xi)
        self._advance(g_hat + self.H * x)
        return RoundOutcome(self.t, S, cost, x, g_hat)
