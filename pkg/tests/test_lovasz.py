import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dpsubmod.lovasz import (
    as_point,
    chain_decompose,
    diameter,
    extension_subgradient,
    extension_value,
    indicator,
    regularized_subgradient,
    regularized_value,
    sample_level_set,
)
from dpsubmod.setfunctions import make_cut_function, random_submodular

from helpers import lovasz_by_integration

unit = st.floats(0.0, 1.0, allow_nan=False)


@pytest.fixture
def cut2():
    return make_cut_function(2, [(0, 1, 1.0)])


def test_chain_of_two_point():
    c = chain_decompose([0.7, 0.3])
    assert c.pi.tolist() == [1, 2]
    assert c.chain == (0b00, 0b01, 0b11)
    np.testing.assert_allclose(c.weights, [0.3, 0.4, 0.3])


def test_ties_break_by_index():
    c = chain_decompose([0.5, 0.5, 0.9])
    assert c.order.tolist() == [2, 0, 1]
    assert c.pi.tolist() == [2, 3, 1]
    assert c.weights[2] == 0.0


def test_cut2_extension_and_subgradients(cut2):
    assert extension_value(cut2, [0.7, 0.3]) == pytest.approx(0.4, abs=1e-12)
    np.testing.assert_array_equal(extension_subgradient(cut2, [0.7, 0.3]), [1.0, -1.0])
    np.testing.assert_array_equal(extension_subgradient(cut2, [0.3, 0.7]), [-1.0, 1.0])


def test_regularized_cut2(cut2):
    assert regularized_value(cut2, [0.7, 0.3], 2.0) == pytest.approx(0.98, abs=1e-12)
    np.testing.assert_allclose(regularized_subgradient(cut2, [0.7, 0.3], 2.0), [2.4, -0.4])


def test_negative_regularization_rejected(cut2):
    with pytest.raises(ValueError):
        regularized_value(cut2, [0.5, 0.5], -1.0)
    with pytest.raises(ValueError):
        regularized_subgradient(cut2, [0.5, 0.5], -0.1)


@pytest.mark.parametrize("x", [[1.2, 0.0], [-0.1, 0.5], [np.nan, 0.5]])
def test_points_outside_cube_rejected(cut2, x):
    with pytest.raises(ValueError):
        extension_value(cut2, x)


def test_dimension_mismatch(cut2):
    with pytest.raises(ValueError):
        extension_value(cut2, [0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        as_point([0.5], 2)


def test_diameter():
    assert diameter(4) == 2.0


def test_agrees_on_vertices():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(1, 8))
        f = random_submodular(n, rng)
        for S in range(1 << n):
            assert extension_value(f, indicator(S, n)) == f(S)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1), st.data())
def test_chain_decomposition_reconstructs_point(n, seed, data):
    x = data.draw(arrays(np.float64, n, elements=unit))
    c = chain_decompose(x)
    assert np.all(c.weights >= 0)
    assert c.weights.sum() == pytest.approx(1.0, abs=1e-12)
    recon = sum(w * indicator(b, n) for w, b in zip(c.weights, c.chain))
    np.testing.assert_allclose(recon, x, atol=1e-12)
    for i in range(n):
        assert c.chain[c.pi[i]] == c.chain[c.pi[i] - 1] | (1 << i)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.data())
def test_value_matches_threshold_integral(n, seed, data):
    f = random_submodular(n, np.random.default_rng(seed))
    x = data.draw(arrays(np.float64, n, elements=unit))
    assert extension_value(f, x) == pytest.approx(lovasz_by_integration(f, x), abs=1e-9 * f.M)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1), st.data())
def test_subgradient_inequality_and_norm(n, seed, data):
    f = random_submodular(n, np.random.default_rng(seed))
    x = data.draw(arrays(np.float64, n, elements=unit))
    y = data.draw(arrays(np.float64, n, elements=unit))
    g = extension_subgradient(f, x)
    assert extension_value(f, y) >= extension_value(f, x) + g @ (y - x) - 1e-9
    assert np.abs(g).sum() <= 4 * f.M + 1e-12
    # the subgradient is an exact linear functional on the chain
    assert g @ x + f(0) == pytest.approx(extension_value(f, x), abs=1e-9 * f.M)


def test_subgradient_is_gradient_where_smooth():
    # at points with distinct interior coordinates the extension is locally linear
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 7))
        f = random_submodular(n, rng)
        x = rng.uniform(0.1, 0.9, n)
        g = extension_subgradient(f, x)
        h = 1e-7
        fd = np.array([(extension_value(f, x + h * e) - extension_value(f, x - h * e)) / (2 * h)
                       for e in np.eye(n)])
        np.testing.assert_allclose(fd, g, atol=1e-5 * f.M)


def test_level_set_distribution():
    x = np.array([0.7, 0.3])
    rng = np.random.default_rng(0)
    counts = np.bincount([sample_level_set(x, rng) for _ in range(20000)], minlength=4)
    # P({}) = 0.3, P({0}) = 0.4, P({0, 1}) = 0.3, {1} alone is impossible
    assert counts[2] == 0
    np.testing.assert_allclose(counts[[0, 1, 3]] / 20000, [0.3, 0.4, 0.3], atol=0.015)


def test_level_set_at_vertices_is_deterministic():
    rng = np.random.default_rng(1)
    assert all(sample_level_set(indicator(0b101, 3), rng) == 0b101 for _ in range(100))
