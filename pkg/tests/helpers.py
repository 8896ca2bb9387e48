import numpy as np

from zrpfluid.generators import random_rates

# filled by test_acceptance, printed by conftest at session end
ACCEPTANCE_LINES = []


def corpus(seed, count, sizes=(3, 4, 5, 6), kinds=("generic", "symmetric", "ties")):
    """Deterministic list of random irreducible rate matrices."""
    rng = np.random.default_rng(seed)
    return [random_rates(rng, sizes[k % len(sizes)], kinds[k % len(kinds)]) for k in range(count)]
