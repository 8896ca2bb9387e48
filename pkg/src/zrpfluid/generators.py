"""Random irreducible models for property checks and benchmarks."""

from __future__ import annotations

import numpy as np

from .markov import RateMatrix, validate_rates


def random_rates(rng: np.random.Generator, n: int, kind: str = "generic", density: float = 0.6) -> RateMatrix:
    """Random irreducible rates on ``n`` sites, normalized so the largest is 1.

    ``generic``: sparse uniform rates on top of a random Hamiltonian cycle;
    ``symmetric``: ``r(i, j) == r(j, i)`` (uniform invariant law);
    ``ties``: reversible with a prescribed invariant law whose maximum is
    attained at several sites, so bottleneck sets have more than one site.
    """
    if kind == "generic":
        r = rng.uniform(0.05, 1.0, (n, n)) * (rng.random((n, n)) < density)
        cycle = rng.permutation(n)
        for a, b in zip(cycle, np.roll(cycle, -1)):
            if a != b:
                r[a, b] = max(r[a, b], rng.uniform(0.05, 1.0))
    elif kind in ("symmetric", "ties"):
        s = rng.uniform(0.05, 1.0, (n, n)) * (rng.random((n, n)) < density)
        s = np.triu(s, 1)
        cycle = rng.permutation(n)
        for a, b in zip(cycle, np.roll(cycle, -1)):
            if a != b:
                lo, hi = min(a, b), max(a, b)
                s[lo, hi] = max(s[lo, hi], rng.uniform(0.05, 1.0))
        s = s + s.T
        if kind == "symmetric":
            r = s
        else:
            mu = rng.integers(1, 4, n).astype(float)
            top = rng.choice(n, size=min(n, int(rng.integers(2, 4))), replace=False)
            mu[top] = 4.0
            # detailed balance mu(i) r(i, j) = s(i, j)
            r = s / mu[:, None]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    np.fill_diagonal(r, 0.0)
    if n > 1:
        r = r / r.max()
    return validate_rates(r)


def random_point(rng: np.random.Generator, n: int, zero_prob: float = 0.4, floor: float = 0.02) -> np.ndarray:
    """Random simplex point with some exact zeros and the rest at least ``floor``-ish."""
    keep = rng.random(n) >= zero_prob
    if not keep.any():
        keep[rng.integers(n)] = True
    w = np.where(keep, floor + rng.random(n), 0.0)
    return w / w.sum()


def random_jump_matrix(rng: np.random.Generator, n: int, density: float = 0.6) -> np.ndarray:
    r = random_rates(rng, n, "generic", density)
    return r.rates / r.exit_rates[:, None]


def random_drift(rng: np.random.Generator, n: int) -> np.ndarray:
    lam = rng.normal(size=n)
    return lam - lam.mean()
