"""Linear algebra on finite continuous-time rate matrices.

Everything here is a pure function of an immutable :class:`RateMatrix`:
embedded jump chain, invariant distribution, hitting probabilities, the
trace of the chain on a subset, and the net flow of a trace.

Subsets of sites may be given as labels (``str``) or as dense indices
(``int``); results are always reported under the original labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import breadth_first_order

from .errors import (
    EmptySiteSet,
    ModelError,
    NonZeroDiagonal,
    NotIrreducible,
    SingularSolve,
    UnknownSite,
)

#: Absolute tolerance on the normalized scale (largest rate equal to one).
TOL = 1e-9

# relative residual above which a dense solve is declared rank deficient
_SOLVE_RESIDUAL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Irreducible jump rates ``rates[i, j]`` between labelled sites.

    Build instances with :func:`validate_rates` (or :meth:`from_json`);
    the constructor itself performs no checks.
    """

    sites: tuple
    rates: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "rates", _frozen(self.rates))
        object.__setattr__(self, "_index", {s: k for k, s in enumerate(self.sites)})

    def __len__(self):
        return len(self.sites)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def exit_rates(self) -> np.ndarray:
        """Total exit rate ``r(i)`` of every site."""
        return self.rates.sum(axis=1)

    @property
    def scale(self) -> float:
        """Largest single rate; tolerances are applied relative to it."""
        return float(self.rates.max())

    def index(self, site) -> int:
        if isinstance(site, (int, np.integer)) and not isinstance(site, bool):
            if 0 <= site < self.n:
                return int(site)
            raise UnknownSite(f"site index {site} out of range for {self.n} sites")
        try:
            return self._index[site]
        except KeyError:
            raise UnknownSite(f"unknown site {site!r}") from None

    def resolve(self, subset: Iterable, allow_empty: bool = False) -> tuple:
        """Sorted tuple of dense indices for a subset of sites."""
        idx = tuple(sorted({self.index(s) for s in subset}))
        if not idx and not allow_empty:
            raise EmptySiteSet("site subset must be nonempty")
        return idx

    def labels(self, idx: Iterable[int]) -> frozenset:
        return frozenset(self.sites[k] for k in idx)

    def ordered_labels(self, idx: Iterable[int]) -> tuple:
        return tuple(self.sites[k] for k in sorted(idx))

    def to_dict(self) -> dict:
        return {"sites": list(self.sites), "rates": self.rates.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "RateMatrix":
        if "rates" not in doc:
            raise ModelError("missing key 'rates'")
        rates = doc["rates"]
        sites = doc.get("sites")
        return validate_rates(rates, sites)

    @classmethod
    def from_json(cls, text: str) -> "RateMatrix":
        return cls.from_dict(json.loads(text))


def validate_rates(raw, labels: Sequence | None = None) -> RateMatrix:
    """Check a square nonnegative array and wrap it as a :class:`RateMatrix`.

    Raises
    ------
    EmptySiteSet
        zero sites.
    NonZeroDiagonal
        some ``raw[i, i] != 0``.
    NotIrreducible
        the digraph ``{(i, j): raw[i, j] > 0}`` is not strongly connected;
        the exception carries an unreachable pair and the reachable set.
    """
    try:
        r = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"rates are not a numeric array: {exc}") from None
    if r.size == 0:
        raise EmptySiteSet("rate matrix has no sites")
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ModelError(f"rates must be a square matrix, got shape {r.shape}")
    n = r.shape[0]
    if labels is None:
        labels = [str(k) for k in range(n)]
    labels = list(labels)
    if len(labels) != n:
        raise ModelError(f"{len(labels)} site labels for {n} sites")
    if len(set(labels)) != n:
        raise ModelError("site labels must be distinct")
    if not np.all(np.isfinite(r)):
        bad = np.argwhere(~np.isfinite(r))[0]
        raise ModelError(f"non-finite rate at rates[{bad[0]}][{bad[1]}]")
    if np.any(r < 0):
        bad = np.argwhere(r < 0)[0]
        raise ModelError(f"negative rate at rates[{bad[0]}][{bad[1]}]")
    for k in range(n):
        if r[k, k] != 0:
            raise NonZeroDiagonal(k, labels[k])
    if n > 1:
        _check_strongly_connected(r, labels)
    return RateMatrix(tuple(labels), r)


def _check_strongly_connected(r, labels):
    adj = (r > 0).astype(np.int8)
    forward = set(breadth_first_order(adj, 0, directed=True, return_predecessors=False))
    n = r.shape[0]
    if len(forward) < n:
        target = min(set(range(n)) - forward)
        rest = [labels[k] for k in range(n) if k not in forward]
        raise NotIrreducible(labels[0], labels[target], [labels[k] for k in sorted(forward)], rest)
    backward = set(breadth_first_order(adj.T, 0, directed=True, return_predecessors=False))
    if len(backward) < n:
        source = min(set(range(n)) - backward)
        reach = set(breadth_first_order(adj, source, directed=True, return_predecessors=False))
        rest = [labels[k] for k in range(n) if k not in reach]
        raise NotIrreducible(
            labels[source], labels[0], [labels[k] for k in sorted(reach)], rest
        )


def embedded_probabilities(r: RateMatrix) -> np.ndarray:
    """Jump-chain matrix ``p(i, j) = r(i, j) / r(i)``."""
    p = r.rates / r.exit_rates[:, None]
    p.setflags(write=False)
    return p


def jump_directions(r: RateMatrix) -> np.ndarray:
    """Rows ``v_i = sum_k r(i, k) (e_k - e_i)``."""
    return r.rates - np.diag(r.exit_rates)


def reflection_directions(p) -> np.ndarray:
    """Rows ``w_i = sum_j p(i, j) (e_i - e_j)``, i.e. the matrix ``I - p``.

    ``sum_i rho(i) w_i`` is therefore ``(I - p.T) @ rho``.
    """
    p = np.asarray(p, dtype=float)
    return np.eye(p.shape[0]) - p


def _solve(a, b):
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(str(exc)) from None
    res = np.abs(a @ x - b).max(initial=0.0)
    scale = np.abs(a).max(initial=0.0) * max(np.abs(x).max(initial=0.0), 1.0) + np.abs(b).max(initial=0.0)
    if not np.all(np.isfinite(x)) or res > _SOLVE_RESIDUAL * max(scale, 1e-300):
        raise SingularSolve(f"linear solve residual {res:.3e} too large")
    return x


def invariant_distribution(r: RateMatrix) -> np.ndarray:
    """Unique probability vector ``mu`` with ``mu @ generator == 0``."""
    n = r.n
    if n == 1:
        return _frozen([1.0])
    gen = jump_directions(r) / r.scale
    a = gen.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    mu = _solve(a, b)
    if mu.min() < -TOL:
        raise SingularSolve(f"invariant vector has negative entry {mu.min():.3e}")
    mu = np.clip(mu, 0.0, None)
    return _frozen(mu / mu.sum())


@dataclass(frozen=True)
class HittingProbabilityMatrix:
    """``probs[k, a]``: probability that the walk from site ``k`` enters
    ``target`` for the first time at ``target[a]``."""

    sites: tuple
    target: tuple
    probs: np.ndarray
    residual: float = 0.0

    def __call__(self, k, i) -> float:
        return float(self.probs[self.sites.index(k), self.target.index(i)])


def _hitting(r: RateMatrix, idx: tuple):
    """Hitting matrix (all sites x idx) and the max harmonic residual."""
    n = r.n
    inside = np.zeros(n, dtype=bool)
    inside[list(idx)] = True
    out = np.flatnonzero(~inside)
    h = np.zeros((n, len(idx)))
    h[list(idx), np.arange(len(idx))] = 1.0
    if out.size == 0:
        return h, 0.0
    rates = r.rates / r.scale
    a = np.diag(rates[out].sum(axis=1)) - rates[np.ix_(out, out)]
    b = rates[np.ix_(out, list(idx))]
    x = _solve(a, b)
    h[out] = x
    residual = float(np.abs(a @ x - b).max())
    return h, residual


def hitting_probabilities(r: RateMatrix, subset) -> HittingProbabilityMatrix:
    """Solve the harmonic systems for first-entrance probabilities into ``subset``."""
    idx = r.resolve(subset)
    h, residual = _hitting(r, idx)
    h.setflags(write=False)
    return HittingProbabilityMatrix(r.sites, r.ordered_labels(idx), h, residual)


def _trace_array(r: RateMatrix, idx: tuple) -> np.ndarray:
    if len(idx) == r.n:
        return np.array(r.rates)
    h, _ = _hitting(r, idx)
    inside = list(idx)
    out = [k for k in range(r.n) if k not in set(idx)]
    tr = r.rates[np.ix_(inside, inside)] + r.rates[np.ix_(inside, out)] @ h[out]
    np.fill_diagonal(tr, 0.0)
    return tr


def _restrict(r: RateMatrix, idx: tuple, arr) -> RateMatrix:
    return RateMatrix(r.ordered_labels(idx), arr)


def trace_rates(r: RateMatrix, subset) -> RateMatrix:
    """Rates of the chain watched only while it sits in ``subset``.

    ``r^A(i, j) = r(i, j) + sum_{k not in A} r(i, k) P(walk from k enters A at j)``.
    """
    idx = r.resolve(subset)
    if len(idx) == r.n:
        return r
    return _restrict(r, idx, _trace_array(r, idx))


def trace_rates_recursive(r: RateMatrix, subset, order: Sequence | None = None) -> RateMatrix:
    """Same quantity as :func:`trace_rates`, eliminating one site at a time.

    Removing site ``k`` maps ``r(i, j) -> r(i, j) + r(i, k) p(k, j)``.
    ``order`` lists the sites outside ``subset`` in elimination order
    (ascending index when omitted).
    """
    idx = r.resolve(subset)
    remove = [k for k in range(r.n) if k not in set(idx)]
    if order is not None:
        ordered = [r.index(s) for s in order]
        if sorted(ordered) != remove:
            raise ModelError("order must list exactly the sites outside the subset")
        remove = ordered
    rates = np.array(r.rates)
    alive = list(range(r.n))
    for k in remove:
        pos = alive.index(k)
        row = rates[pos]
        pk = row / row.sum()
        rates = rates + np.outer(rates[:, pos], pk)
        rates = np.delete(np.delete(rates, pos, axis=0), pos, axis=1)
        np.fill_diagonal(rates, 0.0)
        alive.pop(pos)
    return _restrict(r, idx, rates)


@dataclass(frozen=True)
class FlowVector:
    """Per-site net flow carried by a subset (sums to zero)."""

    sites: tuple
    values: np.ndarray

    def __getitem__(self, site) -> float:
        return float(self.values[self.sites.index(site)])

    def as_dict(self) -> dict:
        return dict(zip(self.sites, self.values.tolist()))


def flow_of(rates: np.ndarray) -> np.ndarray:
    """``lambda(i) = sum_j rates[j, i] - rates[i, j]``."""
    return rates.sum(axis=0) - rates.sum(axis=1)


def _net_flow_idx(r: RateMatrix, idx: tuple) -> np.ndarray:
    if len(idx) == 1:
        return np.zeros(1)
    return flow_of(_trace_array(r, idx))


def net_flow(r: RateMatrix, subset) -> FlowVector:
    """Net flow of the trace of ``r`` on ``subset``."""
    idx = r.resolve(subset)
    return FlowVector(r.ordered_labels(idx), _frozen(_net_flow_idx(r, idx)))
