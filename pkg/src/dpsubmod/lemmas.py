"""Checks of the bandit estimator's properties on randomized instances.

The first three checks are exact: they sum over every outcome of the bandit
step instead of sampling.  Orthogonality of the estimation errors across
rounds involves the learner's update, so it is checked by simulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .learners import (
    BanditLearner,
    Estimator,
    bandit_gradient_estimate,
    bandit_params,
    estimator_outcomes,
)
from .lovasz import chain_decompose, chain_values, extension_subgradient
from .setfunctions import SetFunction, random_submodular

UNBIASED_TOL = 1e-12


@dataclass
class LemmaCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class LemmaReport:
    seed: int
    checks: list[LemmaCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<16} margin={c.margin:.3e}  {c.detail}"
                for c in self.checks]

    def as_dict(self) -> dict:
        return {"seed": self.seed, "passed": self.passed,
                "checks": [c.__dict__ for c in self.checks]}


def random_point(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point, with ties and box-boundary coordinates a quarter of the time."""
    x = rng.random(n)
    if rng.random() < 0.25:
        x = np.round(x * 4) / 4
    return x


def estimator_moments(f: SetFunction, x, gamma: float,
                      estimator: Estimator = bandit_gradient_estimate):
    """Exact ``E[g_hat]``, ``E||g_hat||^2`` and ``E[f(S)]`` of one bandit step at ``x``."""
    chain = chain_decompose(x)
    rho = (1.0 - gamma) * chain.weights + gamma / (chain.n + 1)
    values = chain_values(f, chain)
    mean = np.zeros(chain.n)
    second = 0.0
    for p, g in estimator_outcomes(chain, rho, values, estimator):
        mean += p * g
        second += p * float(g @ g)
    expected_cost = float(rho @ values)
    extension = float(chain.weights @ values)
    return mean, second, expected_cost, extension


def random_instances(count: int, rng: np.random.Generator, n_range=(2, 8), gamma=None):
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        f = random_submodular(n, rng)
        x = random_point(n, rng)
        g = gamma if gamma is not None else 1.0 - rng.random()
        yield f, x, g


def check_estimator_identities(seed: int = 0, instances: int = 1000,
                               estimator: Estimator = bandit_gradient_estimate,
                               n_range=(2, 8), gamma: float | None = None) -> list[LemmaCheck]:
    rng = np.random.default_rng(seed)
    worst_bias = 0.0
    worst_ratio = 0.0
    worst_gap = -math.inf
    for f, x, g in random_instances(instances, rng, n_range, gamma):
        mean, second, cost, ext = estimator_moments(f, x, g, estimator)
        worst_bias = max(worst_bias, float(np.max(np.abs(mean - extension_subgradient(f, x)))))
        worst_ratio = max(worst_ratio, second / (16 * f.M ** 2 * f.n ** 2 / g))
        worst_gap = max(worst_gap, (cost - ext) / (2 * g * f.M))
    return [
        LemmaCheck("unbiasedness", worst_bias <= UNBIASED_TOL, UNBIASED_TOL - worst_bias,
                   f"max |E[g_hat] - subgradient| = {worst_bias:.3e} over {instances} instances"),
        LemmaCheck("second-moment", worst_ratio <= 1.0, 1.0 - worst_ratio,
                   f"max E||g_hat||^2 / (16 M^2 n^2 / gamma) = {worst_ratio:.4f}"),
        LemmaCheck("rounding-gap", worst_gap <= 1.0, 1.0 - worst_gap,
                   f"max (E f(S) - extension) / (2 gamma M) = {worst_gap:.4f}"),
    ]


def orthogonality_samples(seed: int = 0, runs: int = 100_000, n: int = 3, gamma: float = 0.5,
                          epsilon: float = 1.0,
                          estimator: Estimator = bandit_gradient_estimate) -> np.ndarray:
    """``alpha_1 . alpha_2`` from independent two-round bandit runs on fixed functions.

    ``alpha_t`` is the true subgradient at the learner's iterate minus the
    estimate the learner used in round ``t``.
    """
    rng = np.random.default_rng([seed, 0x0A])
    f1, f2 = random_submodular(n, rng), random_submodular(n, rng)
    M = max(f1.M, f2.M)
    x1 = rng.random(n)
    params = bandit_params(n, 2, M, epsilon, gamma=gamma)
    root = np.random.SeedSequence([seed, 0x0B])
    out = np.empty(runs)
    for k, child in enumerate(root.spawn(runs)):
        learner = BanditLearner(params, child, x1=x1, estimator=estimator)
        r1 = learner.step(f1)
        r2 = learner.step(f2)
        a1 = extension_subgradient(f1, r1.iterate) - r1.gradient
        a2 = extension_subgradient(f2, r2.iterate) - r2.gradient
        out[k] = a1 @ a2
    return out


def check_orthogonality(seed: int = 0, runs: int = 100_000,
                        estimator: Estimator = bandit_gradient_estimate) -> LemmaCheck:
    s = orthogonality_samples(seed, runs, estimator=estimator)
    mean = float(s.mean())
    se = float(s.std(ddof=1) / math.sqrt(runs))
    return LemmaCheck("orthogonality", abs(mean) <= 4 * se, 4 * se - abs(mean),
                      f"mean alpha_1.alpha_2 = {mean:.4g}, standard error {se:.3g}, {runs} runs")


def verify_lemma_suite(seed: int = 0, instances: int = 1000, orthogonality_runs: int = 100_000,
                       estimator: Estimator = bandit_gradient_estimate,
                       gamma: float | None = None) -> LemmaReport:
    report = LemmaReport(seed)
    report.checks.extend(check_estimator_identities(seed, instances, estimator, gamma=gamma))
    report.checks.append(check_orthogonality(seed, orthogonality_runs, estimator))
    return report
