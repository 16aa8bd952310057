"""Tree-based aggregation of a vector stream into epsilon-DP prefix sums.

Leaves hold the stream items; a node at level ``k`` (leaves are level 0)
with index ``j`` holds the sum of leaves ``j*2^k .. (j+1)*2^k - 1`` plus one
noise vector, drawn once at the moment its last leaf arrives.  That moment
is exactly when the node lies on the arriving leaf's path below (and
including) the first left child, so the draw schedule matches the classic
"noise the path up to the first left child" rule.  A prefix ``1..t`` is the
sum of at most ``depth`` completed nodes picked by the set bits of ``t``.
"""
from __future__ import annotations

import math

import numpy as np


def sample_tree_noise(d: int, b: float, rng: np.random.Generator) -> np.ndarray:
    """Draw from the density proportional to ``exp(-||v||_2 / b)`` on R^d.

    The norm is Gamma(shape=d, scale=b) and the direction is uniform on the
    sphere.
    """
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if not b > 0:
        raise ValueError(f"noise scale must be positive, got {b}")
    u = rng.standard_normal(d)
    norm = math.sqrt(float(u @ u))
    while norm == 0.0:
        u = rng.standard_normal(d)
        norm = math.sqrt(float(u @ u))
    return (rng.gamma(d, b) / norm) * u


class SensitivityError(ValueError):
    """A stream item exceeded the norm bound the noise was calibrated for."""


class NoisyPrefixSumTree:
    """Streaming prefix sums of vectors with L2 norm at most ``norm_bound``.

    ``epsilon=math.inf`` disables noise; outputs are then exact prefix sums
    and the instance reports ``private == False``.

    Instrumentation kept for accounting checks: ``noise_draws[k][j]`` counts
    draws added to node ``(k, j)``; ``last_touched`` and ``last_read`` hold the
    nodes updated by the latest :meth:`append` and summed into its output.
    """

    def __init__(self, T: int, dim: int, norm_bound: float, epsilon: float,
                 rng: np.random.Generator | None = None):
        if T < 1:
            raise ValueError(f"horizon must be positive, got {T}")
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        if not norm_bound > 0:
            raise ValueError(f"norm bound must be positive, got {norm_bound}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive (or inf), got {epsilon}")
        self.T = int(T)
        self.dim = int(dim)
        self.norm_bound = float(norm_bound)
        self.epsilon = float(epsilon)
        self.depth = math.ceil(math.log2(self.T)) + 1
        self.capacity = 1 << (self.depth - 1)
        self.private = not math.isinf(self.epsilon)
        self.noise_scale = self.norm_bound * self.depth / self.epsilon if self.private else 0.0
        self.rng = rng if rng is not None else np.random.default_rng()
        self.nodes = [np.zeros((self.capacity >> k, self.dim)) for k in range(self.depth)]
        self.noise_draws = [np.zeros(self.capacity >> k, dtype=np.int64) for k in range(self.depth)]
        self.t = 0
        self.last_touched: list[tuple[int, int]] = []
        self.last_read: list[tuple[int, int]] = []
        self._norm_limit = self.norm_bound * (1.0 + 1e-12)

    def append(self, z) -> np.ndarray:
        """Add ``z`` to the stream and return the noisy sum of all items so far."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.dim,):
            raise ValueError(f"expected a vector of shape ({self.dim},), got {z.shape}")
        norm = math.sqrt(float(z @ z))
        if not norm <= self._norm_limit:
            raise SensitivityError(f"item norm {norm:.6g} exceeds the calibrated bound {self.norm_bound:.6g}")
        if self.t >= self.T:
            raise OverflowError(f"stream already holds {self.T} items")

        idx = self.t
        self.t += 1
        touched = []
        for k in range(self.depth):
            j = idx >> k
            node = self.nodes[k][j]
            node += z
            touched.append((k, j))
            # the node's last leaf just arrived: it is final and gets its one draw
            if self.private and (self.t & ((1 << k) - 1)) == 0:
                node += sample_tree_noise(self.dim, self.noise_scale, self.rng)
                self.noise_draws[k][j] += 1
        self.last_touched = touched
        return self._prefix(self.t)

    def _prefix(self, t: int) -> np.ndarray:
        v = np.zeros(self.dim)
        read = []
        for k in range(self.depth):
            if t >> k & 1:
                j = (t >> k) - 1
                v += self.nodes[k][j]
                read.append((k, j))
        self.last_read = read
        return v

    def metadata(self) -> dict:
        return {
            "horizon": self.T,
            "dimension": self.dim,
            "norm_bound": self.norm_bound,
            "epsilon": "inf" if not self.private else self.epsilon,
            "depth": self.depth,
            "noise_scale": self.noise_scale,
            "private": self.private,
        }
