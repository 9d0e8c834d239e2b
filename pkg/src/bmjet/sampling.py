"""Seeded random jet points for verification sweeps.

Each point is drawn as follows:

* t uniform in [0, 1];
* x uniform in [-1, 1]^n;
* |y^i| log-uniform in [0.1, 10];
* then, when ``negate`` is set, the signs of a random subset of y are flipped.
  The subset has even size, chosen uniformly from {0, 2, ..., 2*floor(n/2)},
  so the y-product stays positive.

The same seed always gives the same points (numpy ``default_rng``).
"""

from __future__ import annotations

import numpy as np

from .jet_geometry import JetPoint

Y_RANGE = (0.1, 10.0)


def random_point(rng: np.random.Generator, n: int, negate: bool = True) -> JetPoint:
    t = rng.uniform(0.0, 1.0)
    x = rng.uniform(-1.0, 1.0, size=n)
    lo, hi = np.log(Y_RANGE[0]), np.log(Y_RANGE[1])
    y = np.exp(rng.uniform(lo, hi, size=n))
    if negate:
        k = 2 * int(rng.integers(0, n // 2 + 1))
        flip = rng.choice(n, size=k, replace=False)
        y[flip] *= -1.0
    return JetPoint(t, x, y)


def random_points(n: int, count: int, seed: int, negate: bool = True) -> list[JetPoint]:
    rng = np.random.default_rng(seed)
    return [random_point(rng, n, negate) for _ in range(count)]
