"""Absorbing subsets of sites, minimal absorbing closures and bottlenecks.

A subset ``A`` is absorbing when adjoining any outside site ``j`` gives a
trace whose net flow at ``j`` is nonpositive; the simplex face spanned by an
absorbing set is never left by the fluid limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import TooManySites
from .markov import TOL, RateMatrix, _net_flow_idx, invariant_distribution

MAX_ENUMERATION_SITES = 12


@dataclass(frozen=True)
class AbsorbingReport:
    subset: frozenset
    absorbing: bool
    witnesses: dict  # outside label -> net flow at that label after adjoining it


@dataclass(frozen=True)
class MinimalAbsorbingTrace:
    input: frozenset
    iterations: tuple  # (A_k, O_k) pairs of frozensets, last O_k empty
    result: frozenset


def _witness(r: RateMatrix, idx: tuple, j: int) -> float:
    joined = tuple(sorted(idx + (j,)))
    return float(_net_flow_idx(r, joined)[joined.index(j)])


def _is_absorbing_idx(r: RateMatrix, idx: tuple, tol: float) -> bool:
    if len(idx) == r.n or not idx:
        return True
    cut = tol * r.scale
    return all(_witness(r, idx, j) <= cut for j in range(r.n) if j not in idx)


def is_r_absorbing(r: RateMatrix, subset, tol: float = TOL) -> AbsorbingReport:
    idx = r.resolve(subset, allow_empty=True)
    witnesses = {}
    if idx and len(idx) < r.n:
        for j in range(r.n):
            if j not in idx:
                witnesses[r.sites[j]] = _witness(r, idx, j)
    cut = tol * r.scale
    absorbing = all(v <= cut for v in witnesses.values())
    return AbsorbingReport(r.labels(idx), absorbing, witnesses)


def _minimal_absorbing_idx(r: RateMatrix, s_idx: tuple, tol: float):
    cut = tol * r.scale
    current = tuple(range(r.n))
    steps = []
    s_set = set(s_idx)
    while True:
        lam = _net_flow_idx(r, current)
        removed = tuple(k for k, v in zip(current, lam) if k not in s_set and v <= cut)
        steps.append((current, removed))
        if not removed:
            return current, steps
        current = tuple(k for k in current if k not in set(removed))


def minimal_absorbing(r: RateMatrix, support, tol: float = TOL) -> MinimalAbsorbingTrace:
    """Smallest absorbing superset of ``support``, by iterated pruning from ``V``.

    Sites outside ``support`` with nonpositive net flow in the current trace
    are pruned until none remain; every intermediate set is absorbing.
    """
    s_idx = r.resolve(support)
    result, steps = _minimal_absorbing_idx(r, s_idx, tol)
    iterations = tuple((r.labels(a), r.labels(o)) for a, o in steps)
    return MinimalAbsorbingTrace(r.labels(s_idx), iterations, r.labels(result))


def bottleneck_set(r: RateMatrix, tol: float = TOL) -> frozenset:
    """Sites whose invariant mass is maximal (up to ``tol``)."""
    mu = invariant_distribution(r)
    return r.labels(np.flatnonzero(mu >= mu.max() - tol))


def enumerate_absorbing(r: RateMatrix, tol: float = TOL) -> list:
    """All nonempty absorbing subsets by exhaustive scan, smallest first."""
    if r.n > MAX_ENUMERATION_SITES:
        raise TooManySites(f"enumeration limited to {MAX_ENUMERATION_SITES} sites, got {r.n}")
    found = []
    for size in range(1, r.n + 1):
        for idx in combinations(range(r.n), size):
            if _is_absorbing_idx(r, idx, tol):
                found.append(r.labels(idx))
    return found
