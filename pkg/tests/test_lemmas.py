import numpy as np
import pytest

from dpsubmod.learners import bandit_gradient_estimate
from dpsubmod.lemmas import (
    check_estimator_identities,
    check_orthogonality,
    estimator_moments,
    orthogonality_samples,
    verify_lemma_suite,
)
from dpsubmod.lovasz import extension_value
from dpsubmod.setfunctions import make_cut_function, random_submodular


def biased_estimator(chain, rho, i, f_val, xi=1):
    """A deliberately wrong estimator: drops the factor of two on interior sets."""
    g = bandit_gradient_estimate(chain, rho, i, f_val, xi)
    if 0 < i < chain.n:
        g = g / 2
    return g


def test_moments_on_cut2():
    f = make_cut_function(2, [(0, 1, 1.0)])
    x = [0.7, 0.3]
    gamma = 0.3
    mean, second, cost, ext = estimator_moments(f, x, gamma)
    np.testing.assert_allclose(mean, [1.0, -1.0], atol=1e-12)
    # only the middle set has nonzero value: E||g||^2 = rho_1 * (2 / rho_1)^2
    assert second == pytest.approx(4 / 0.38)
    assert cost == pytest.approx(0.38)
    assert ext == pytest.approx(0.4)


def test_second_moment_closed_form():
    # gamma / rho_i = 1 / ((1 - gamma) mu_i / gamma + 1 / (n + 1)) rises with gamma,
    # so the margin 1 - E||g||^2 / (16 M^2 n^2 / gamma) shrinks as exploration grows
    f = random_submodular(4, np.random.default_rng(3))
    x = np.array([0.1, 0.6, 0.35, 0.9])
    margins = []
    for gamma in (0.05, 0.2, 0.5, 1.0):
        _, second, _, _ = estimator_moments(f, x, gamma)
        margins.append(1 - second / (16 * f.M ** 2 * f.n ** 2 / gamma))
    assert all(0 <= m <= 1 for m in margins)
    assert margins == sorted(margins, reverse=True)


def test_rounding_gap_vanishes_without_exploration():
    f = random_submodular(3, np.random.default_rng(2))
    x = np.array([0.2, 0.8, 0.5])
    _, _, cost, ext = estimator_moments(f, x, 1e-12)
    assert cost == pytest.approx(extension_value(f, x), abs=1e-9)


def test_identities_pass_for_correct_estimator():
    checks = check_estimator_identities(seed=1, instances=200)
    assert [c.name for c in checks] == ["unbiasedness", "second-moment", "rounding-gap"]
    assert all(c.passed for c in checks)


def test_identities_catch_biased_estimator():
    checks = check_estimator_identities(seed=1, instances=200, estimator=biased_estimator)
    assert not checks[0].passed


def test_orthogonality_samples_shape_and_determinism():
    a = orthogonality_samples(seed=3, runs=500)
    b = orthogonality_samples(seed=3, runs=500)
    assert a.shape == (500,) and np.array_equal(a, b)


def test_orthogonality_small_run_passes():
    assert check_orthogonality(seed=0, runs=5000).passed


def test_suite_report():
    rep = verify_lemma_suite(seed=0, instances=100, orthogonality_runs=2000)
    assert rep.passed
    assert len(rep.lines()) == 4 and all(ln.startswith("PASS") for ln in rep.lines())
    assert rep.as_dict()["passed"] is True
