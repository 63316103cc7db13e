"""Instance builders shared by the test modules."""

import numpy as np

from lccp.instance import Instance, generate_euclidean, generate_uniform


def mixed_instance(seed: int, n: int) -> Instance:
    """Alternates Euclidean and uniform instances and cycles through tight and loose critical times."""
    crit_ranges = [(100.0, 300.0), (40.0, 120.0), (150.0, 400.0), (60.0, 200.0)]
    lo, hi = crit_ranges[(seed // 2) % len(crit_ranges)]
    if seed % 2:
        return generate_euclidean(n, seed, crit_low=lo, crit_high=hi)
    return generate_uniform(n, seed, crit_low=lo, crit_high=hi)


def random_duals(rng: np.random.Generator, n: int) -> list[float]:
    return rng.uniform(0.0, 1.0, size=n).tolist()


def make_instance(travel, crit, metric=False) -> Instance:
    return Instance(np.array(travel, dtype=float), np.array(crit, dtype=float), metric)
