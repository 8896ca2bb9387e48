"""Event-driven simulation of the zero-range process and fluid-limit convergence runs.

A site holding ``n`` particles emits one at rate ``g(n) * r(i)``; the
particle jumps to ``j`` with probability ``p(i, j)``.  Observed on the fluid
clock (process time ``t * N``, occupations divided by ``N``) the process
approaches the piecewise-linear fluid trajectory as ``N`` grows.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_kernel
from .errors import HorizonExceeded, ModelError
from .fluid import fluid_trajectory, simplex_point
from .markov import RateMatrix, embedded_probabilities

log = logging.getLogger(__name__)

#: events per kernel call; part of the reproducibility contract (uniforms are drawn per chunk)
CHUNK = 1 << 15

#: sample points of the fluid clock used by :func:`convergence_experiment`
GRID_POINTS = 200


@dataclass(frozen=True)
class JumpRateFunction:
    """Departure-rate multiplier ``g(n)``: ``g(0) = 0``, ``g(n) >= 1``, ``g(n) -> 1``.

    ``constant``: ``g(n) = 1`` (closed Jackson network);
    ``evans``: ``g(n) = 1 + b / n``;
    ``table``: ``g(n) = values[n - 1]`` for ``n <= len(values)`` and 1 beyond.
    """

    kind: str = "constant"
    b: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "constant":
            pass
        elif self.kind == "evans":
            if not self.b > 0:
                raise ModelError(f"evans jump rates need b > 0, got {self.b}")
        elif self.kind == "table":
            if any(not (v >= 1.0 and np.isfinite(v)) for v in self.values):
                raise ModelError("table jump rates must satisfy g(n) >= 1")
        else:
            raise ModelError(f"unknown jump-rate kind {self.kind!r}")

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def evans(cls, b: float):
        return cls("evans", b=float(b))

    @classmethod
    def table(cls, values, tail: float = 1.0):
        if tail != 1.0:
            raise ModelError(f"table tail must be exactly 1, got {tail}")
        return cls("table", values=tuple(values))

    @classmethod
    def from_dict(cls, doc: dict | None):
        if not doc:
            return cls.constant()
        kind = doc.get("kind", "constant")
        if kind == "evans":
            return cls.evans(doc.get("b", 0.0))
        if kind == "table":
            return cls.table(doc.get("values", ()), doc.get("tail", 1.0))
        return cls(kind)

    def to_dict(self) -> dict:
        if self.kind == "evans":
            return {"kind": "evans", "b": self.b}
        if self.kind == "table":
            return {"kind": "table", "values": list(self.values), "tail": 1.0}
        return {"kind": self.kind}

    def __call__(self, n: int) -> float:
        if n <= 0:
            return 0.0
        if self.kind == "evans":
            return 1.0 + self.b / n
        if self.kind == "table" and n <= len(self.values):
            return self.values[n - 1]
        return 1.0

    def lookup(self, nmax: int) -> np.ndarray:
        """``g(0), ..., g(nmax)`` as a float array."""
        return np.array([self(n) for n in range(nmax + 1)], dtype=float)


def initial_configuration(u, n_particles: int) -> np.ndarray:
    """Round ``n_particles * u`` to integers summing to ``n_particles``
    (largest remainder, ties to the lower index)."""
    u = np.asarray(u, dtype=float)
    exact = n_particles * u
    eta = np.floor(exact).astype(np.int64)
    short = n_particles - int(eta.sum())
    if short > 0:
        order = np.argsort(-(exact - eta), kind="stable")
        eta[order[:short]] += 1
    return eta


@dataclass(frozen=True, eq=False)
class EventLog:
    """Jump times (process clock) with source and destination sites."""

    initial: np.ndarray
    times: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    t_max: float
    seed: object = None

    @property
    def n_particles(self) -> int:
        return int(self.initial.sum())

    def __len__(self):
        return len(self.times)

    def counts_at(self, process_times) -> np.ndarray:
        """Occupation vector just after all jumps at or before each time."""
        s = np.asarray(process_times, dtype=float)
        upto = np.searchsorted(self.times, s, side="right")
        n = len(self.initial)
        out = np.empty((len(s), n), dtype=np.int64)
        for i in range(n):
            net = np.concatenate(([0], np.cumsum((self.dst == i).astype(np.int64) - (self.src == i))))
            out[:, i] = self.initial[i] + net[upto]
        return out

    def final_counts(self) -> np.ndarray:
        return self.counts_at([self.t_max])[0]

    def occupation_fractions(self, start: float = 0.0, stop: float | None = None) -> np.ndarray:
        """Time-average of ``counts / N`` over ``[start, stop]``."""
        stop = self.t_max if stop is None else stop
        inside = (self.times > start) & (self.times < stop)
        edges = np.concatenate(([start], self.times[inside], [stop]))
        states = self.counts_at(edges[:-1])
        weights = np.diff(edges)
        return (weights @ states) / (stop - start) / self.n_particles


def _jump_tables(r: RateMatrix):
    p = embedded_probabilities(r)
    cum = np.cumsum(p, axis=1)
    for i in range(r.n):
        last = np.flatnonzero(p[i] > 0)[-1]
        cum[i, last:] = 1.0
    return np.ascontiguousarray(r.exit_rates, dtype=float), np.ascontiguousarray(cum)


def simulate_zrp(
    r: RateMatrix,
    g: JumpRateFunction,
    eta0,
    t_max: float,
    seed=None,
    backend: str | None = None,
) -> EventLog:
    """Next-event simulation of the zero-range process up to process time ``t_max``.

    Identical ``seed`` gives an identical event sequence, whichever kernel runs.
    """
    counts = np.array(eta0, dtype=np.int64)
    if counts.shape != (r.n,) or counts.min() < 0:
        raise ModelError("initial configuration must be a nonnegative count per site")
    n_particles = int(counts.sum())
    if n_particles < 1:
        raise ModelError("need at least one particle")
    if not np.isfinite(t_max) or t_max < 0:
        raise ModelError("t_max must be finite and nonnegative")
    kernel = get_kernel(backend)
    exit_rates, cum = _jump_tables(r)
    g_table = g.lookup(n_particles)
    rng = np.random.default_rng(seed)
    initial = counts.copy()
    chunks_t, chunks_s, chunks_d = [], [], []
    t = 0.0
    finished = False
    while not finished:
        uniforms = rng.random(3 * CHUNK)
        ev_t = np.empty(CHUNK)
        ev_s = np.empty(CHUNK, dtype=np.int32)
        ev_d = np.empty(CHUNK, dtype=np.int32)
        k, t, finished = kernel(counts, g_table, exit_rates, cum, t, float(t_max), uniforms, ev_t, ev_s, ev_d)
        chunks_t.append(ev_t[:k])
        chunks_s.append(ev_s[:k])
        chunks_d.append(ev_d[:k])
    log.debug("simulated %d events up to t=%g", sum(map(len, chunks_t)), t_max)
    return EventLog(
        initial,
        np.concatenate(chunks_t),
        np.concatenate(chunks_s),
        np.concatenate(chunks_d),
        float(t_max),
        seed,
    )


@dataclass(frozen=True, eq=False)
class SampledPath:
    times: np.ndarray  # fluid clock
    points: np.ndarray
    n_particles: int
    seed: object = None


def rescaled_path(events: EventLog, n_particles: int, times) -> SampledPath:
    """Occupations divided by ``N`` at process times ``t * N``."""
    ts = np.asarray(times, dtype=float)
    if ts.size and ts.max() * n_particles > events.t_max * (1 + 1e-12):
        raise HorizonExceeded(
            f"sample time {ts.max()} needs process time {ts.max() * n_particles}, "
            f"events cover {events.t_max}"
        )
    counts = events.counts_at(ts * n_particles)
    return SampledPath(ts, counts / n_particles, n_particles, events.seed)


def trial_seed(master_seed: int, n_particles: int, trial: int) -> np.random.SeedSequence:
    """Independent stream per ``(N, trial)``: both are mixed into the spawn key."""
    return np.random.SeedSequence(master_seed, spawn_key=(int(n_particles), int(trial)))


def sup_distance(r, g, u, n_particles, horizon, seed, backend=None) -> float:
    """``max_t |zeta^N_t - zeta^u_t|_inf`` over the fixed fluid-clock grid."""
    grid = np.linspace(0.0, horizon, GRID_POINTS + 1)
    fluid = fluid_trajectory(r, u).sample(grid)
    eta0 = initial_configuration(u, n_particles)
    events = simulate_zrp(r, g, eta0, horizon * n_particles, seed, backend)
    sampled = rescaled_path(events, n_particles, grid)
    return float(np.abs(sampled.points - fluid).max())


def _trial(args):
    return sup_distance(*args)


@dataclass
class ConvergenceResult:
    n_list: list
    rows: list = field(default_factory=list)  # (N, trial, sup_distance)

    def distances(self, n_particles: int) -> np.ndarray:
        return np.array([d for n, _, d in self.rows if n == n_particles])

    def summary(self) -> list:
        out = []
        for n in self.n_list:
            d = self.distances(n)
            out.append(
                {
                    "N": n,
                    "trials": int(d.size),
                    "median": float(np.median(d)),
                    "p90": float(np.percentile(d, 90)),
                    "max": float(d.max()),
                }
            )
        return out

    def medians(self) -> list:
        return [s["median"] for s in self.summary()]

    def strictly_decreasing(self) -> bool:
        m = self.medians()
        return all(b < a for a, b in zip(m, m[1:]))


def convergence_experiment(
    r: RateMatrix,
    g: JumpRateFunction,
    u,
    n_list,
    horizon: float,
    trials: int,
    master_seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> ConvergenceResult:
    """Sup-distance between rescaled simulations and the fluid trajectory on ``[0, horizon]``."""
    u = simplex_point(u, r.n)
    n_list = [int(n) for n in n_list]
    jobs = [
        (r, g, u, n, horizon, trial_seed(master_seed, n, k), backend)
        for n in n_list
        for k in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            dists = list(pool.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        dists = [_trial(job) for job in jobs]
    keys = [(n, k) for n in n_list for k in range(trials)]
    return ConvergenceResult(n_list, [(n, k, d) for (n, k), d in zip(keys, dists)])
