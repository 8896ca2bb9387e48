"""Piecewise-linear fluid trajectories on the simplex and their reflection regulators.

The trajectory from ``u`` moves with the net flow of the trace on the
minimal absorbing closure of its support, until a coordinate hits zero;
the support is then recomputed.  The same path solves an oblique
reflection problem driven by ``u + t * lam`` where ``lam`` is the net flow
of the full chain; :func:`regulator_path` gives the pushing process in
closed form and :func:`verify_orp` checks it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .absorbing import _minimal_absorbing_idx
from .errors import (
    ConsistencyFailure,
    DriftNotBalanced,
    ModelError,
    NonTermination,
    NotStochastic,
)
from .markov import (
    TOL,
    RateMatrix,
    _check_strongly_connected,
    _net_flow_idx,
    _solve,
    embedded_probabilities,
    flow_of,
    reflection_directions,
)

# input points may miss unit mass by this much before renormalization
_MASS_SLACK = 1e-6


def simplex_point(values, n: int | None = None, tol: float = TOL) -> np.ndarray:
    """Validate ``values`` as a point of the simplex.

    Entries within ``tol`` of zero are set to zero and the vector is
    rescaled to unit mass.
    """
    u = np.array(values, dtype=float).ravel()
    if n is not None and u.size != n:
        raise ModelError(f"simplex point has {u.size} coordinates, expected {n}")
    if u.size == 0 or not np.all(np.isfinite(u)):
        raise ModelError("simplex point must be a nonempty finite vector")
    if u.min() < -tol:
        raise ModelError(f"simplex point has negative coordinate {u.min():.3e}")
    if abs(u.sum() - 1.0) > _MASS_SLACK:
        raise ModelError(f"simplex point has mass {u.sum():.12g}, expected 1")
    u[u <= tol] = 0.0
    u /= u.sum()
    u.setflags(write=False)
    return u


def point_from_mapping(r: RateMatrix, mapping: dict, tol: float = TOL) -> np.ndarray:
    """Simplex point from ``{label: mass}``; unlisted sites get zero."""
    u = np.zeros(r.n)
    for site, mass in mapping.items():
        u[r.index(site)] = mass
    return simplex_point(u, r.n, tol)


def support(u, tol: float = TOL) -> tuple:
    return tuple(int(k) for k in np.flatnonzero(np.asarray(u) > tol))


def _closure_and_velocity(r: RateMatrix, u, tol: float):
    s_idx = support(u, tol)
    closure, _ = _minimal_absorbing_idx(r, s_idx, tol)
    lam = np.zeros(r.n)
    lam[list(closure)] = _net_flow_idx(r, closure)
    return s_idx, closure, lam


def velocity(r: RateMatrix, u, tol: float = TOL) -> np.ndarray:
    """Drift at ``u``: net flow of the trace on the minimal absorbing closure
    of the support of ``u``, zero outside the closure."""
    u = simplex_point(u, r.n, tol)
    return _closure_and_velocity(r, u, tol)[2]


def exit_time(u, lam, tol: float = TOL) -> float | None:
    """Time for ``u + t * lam`` to leave the simplex; ``None`` if it never does."""
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    down = (u > tol) & (lam < -tol)
    if not down.any():
        return None
    return float(np.min(-u[down] / lam[down]))


@dataclass(frozen=True, eq=False)
class PiecewiseLinearPath:
    """Breakpoints ``(times[k], points[k])`` with constant ``velocities[k]``
    on ``[times[k], times[k+1])``; the last velocity is zero."""

    sites: tuple
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    supports: tuple  # index tuples S(v_k)
    closures: tuple  # index tuples A(v_k)

    @property
    def terminal(self) -> int:
        return len(self.times) - 1

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> np.ndarray:
        return evaluate_path(self, t)

    def sample(self, ts) -> np.ndarray:
        return np.array([evaluate_path(self, t) for t in np.asarray(ts, dtype=float)])

    def breakpoints(self) -> list:
        out = []
        for k in range(len(self.times)):
            out.append(
                {
                    "t": float(self.times[k]),
                    "point": dict(zip(self.sites, self.points[k].tolist())),
                    "velocity": dict(zip(self.sites, self.velocities[k].tolist())),
                    "support": [self.sites[i] for i in self.supports[k]],
                    "closure": [self.sites[i] for i in self.closures[k]],
                }
            )
        return out


def _segment(times, t):
    return int(np.searchsorted(times, t, side="right")) - 1


def evaluate_path(path: PiecewiseLinearPath, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("paths are defined for t >= 0 only")
    k = _segment(path.times, t)
    if k >= path.terminal:
        return path.points[-1].copy()
    z = path.points[k] + (t - path.times[k]) * path.velocities[k]
    return np.clip(z, 0.0, None)


def fluid_trajectory(r: RateMatrix, u, tol: float = TOL) -> PiecewiseLinearPath:
    """Exact fluid limit from ``u`` as a list of linear segments."""
    v = simplex_point(u, r.n, tol)
    cut = tol * r.scale
    times, points, vels, supports, closures = [0.0], [v], [], [], []
    t = 0.0
    for _ in range(r.n):
        s_idx, closure, lam = _closure_and_velocity(r, v, tol)
        supports.append(s_idx)
        closures.append(closure)
        if np.abs(lam).max() <= cut:
            vels.append(np.zeros(r.n))
            break
        ratios = np.full(r.n, np.inf)
        down = (v > tol) & (lam < -cut)
        ratios[down] = -v[down] / lam[down]
        dt = float(ratios.min())
        if not np.isfinite(dt):
            raise ConsistencyFailure(f"nonzero drift {lam} without a decreasing coordinate")
        nxt = v + dt * lam
        # every coordinate reaching zero with the minimizer is clamped together
        nxt[ratios - dt <= tol * max(1.0, dt)] = 0.0
        nxt[nxt <= tol] = 0.0
        nxt /= nxt.sum()
        vels.append(lam)
        t += dt
        times.append(t)
        points.append(nxt)
        v = nxt
    else:
        raise NonTermination(f"more than {r.n - 1} breakpoints; tolerance {tol} too small?")
    arr = lambda xs: np.array(xs, dtype=float)  # noqa: E731
    times, points, vels = arr(times), arr(points), arr(vels)
    for a in (times, points, vels):
        a.setflags(write=False)
    return PiecewiseLinearPath(r.sites, times, points, vels, tuple(supports), tuple(closures))


@dataclass(frozen=True, eq=False)
class RegulatorPath:
    """Cumulative regulator: ``values[k]`` at ``times[k]``, growing at ``slopes[k]``
    until the next breakpoint (the last slope applies forever)."""

    sites: tuple
    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        k = _segment(self.times, t)
        return self.values[k] + (t - self.times[k]) * self.slopes[k]

    def sample(self, ts) -> np.ndarray:
        return np.array([self(t) for t in np.asarray(ts, dtype=float)])


def regulator_slope(r: RateMatrix, support_idx, closure_idx, lam_closure, tol: float = TOL):
    """Regulator growth rate while the path has support ``support_idx``.

    On the sites outside the support it solves
    ``(I - p.T)[out, out] y = (lam_closure - lam_full)[out]``; ``y`` must vanish
    on ``closure \\ support`` and be nonnegative outside the closure.
    """
    n = r.n
    y = np.zeros(n)
    out = [k for k in range(n) if k not in set(support_idx)]
    if not out:
        return y
    p = embedded_probabilities(r)
    m = reflection_directions(p).T
    rhs = np.asarray(lam_closure, dtype=float) - flow_of(r.rates)
    y[out] = _solve(m[np.ix_(out, out)], rhs[out])
    cut = tol * r.scale
    inner = [k for k in closure_idx if k not in set(support_idx)]
    outer = [k for k in out if k not in set(closure_idx)]
    if inner and np.abs(y[inner]).max() > cut:
        raise ConsistencyFailure(f"regulator slope nonzero on closure sites: {y[inner]}")
    if outer and y[outer].min() < -cut:
        raise ConsistencyFailure(f"negative regulator slope outside closure: {y[outer]}")
    return y


def regulator_path(r: RateMatrix, path: PiecewiseLinearPath, tol: float = TOL) -> RegulatorPath:
    """Closed-form regulator aligned with the breakpoints of ``path``."""
    slopes = np.array(
        [
            regulator_slope(r, s, a, lam, tol)
            for s, a, lam in zip(path.supports, path.closures, path.velocities)
        ]
    )
    values = np.zeros_like(slopes)
    for k in range(1, len(path.times)):
        values[k] = values[k - 1] + (path.times[k] - path.times[k - 1]) * slopes[k - 1]
    for a in (slopes, values):
        a.setflags(write=False)
    return RegulatorPath(path.sites, path.times, values, slopes)


@dataclass(frozen=True)
class OrpReport:
    passed: bool
    max_decrease: float
    max_complementarity: float
    max_residual: float
    min_coordinate: float
    violations: tuple

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_decrease": self.max_decrease,
            "max_complementarity": self.max_complementarity,
            "max_residual": self.max_residual,
            "min_coordinate": self.min_coordinate,
            "violations": list(self.violations),
        }


def verify_orp(path: PiecewiseLinearPath, regulator: RegulatorPath, r: RateMatrix, u, tol: float = TOL) -> OrpReport:
    """Check that ``(path, regulator)`` solves the reflection problem with input
    ``u + t * lam``, at every breakpoint and segment midpoint.

    (i)  each regulator coordinate is nondecreasing and only grows on
         segments where that coordinate of the path stays at zero;
    (ii) ``path(t) = u + t * lam + sum_i rho_t(i) w_i`` and ``path(t) >= 0``.
    """
    u = np.asarray(u, dtype=float)
    lam = flow_of(r.rates)
    push = reflection_directions(embedded_probabilities(r)).T
    horizon = max(1.0, path.final_time)
    ends = np.append(path.times, path.final_time + horizon)
    violations = []

    decrease = 0.0
    compl = 0.0
    jump = 0.0
    for k in range(len(ends) - 1):
        a, b = ends[k], ends[k + 1]
        left = regulator(a)
        mid = regulator(0.5 * (a + b))
        end = regulator.values[k] + (b - a) * regulator.slopes[k]
        if k + 1 < len(path.times):
            jump = max(jump, float(np.abs(regulator(b) - end).max()))
        grow = end - left
        decrease = max(decrease, float(-(mid - left).min()), float(-(end - mid).min()))
        # linear on the segment: zero at both ends and the midpoint means zero throughout
        zs = np.max([path(a), path(0.5 * (a + b)), path(b)], axis=0)
        active = grow > tol
        if active.any():
            compl = max(compl, float(zs[active].max()))
    if decrease > tol:
        violations.append(f"(i) regulator decreases by {decrease:.3e}")
    if jump > tol:
        violations.append(f"(i) regulator jumps by {jump:.3e} at a breakpoint")
    if compl > tol:
        violations.append(f"(i) regulator grows while coordinate is {compl:.3e} > 0")

    checks = np.unique(np.concatenate([ends, 0.5 * (ends[:-1] + ends[1:])]))
    residual = 0.0
    lowest = np.inf
    for t in checks:
        z = path(t)
        err = z - (u + t * lam) - push @ regulator(t)
        residual = max(residual, float(np.abs(err).max()))
        lowest = min(lowest, float(z.min()))
    if residual > tol:
        violations.append(f"(ii) reconstruction residual {residual:.3e}")
    if lowest < -tol:
        violations.append(f"(ii) path leaves the orthant ({lowest:.3e})")
    return OrpReport(not violations, decrease, compl, residual, lowest, tuple(violations))


def _stationary(p: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    a = (np.eye(n) - p).T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return _solve(a, b)


def rates_from_probabilities(p, lam, tol: float = TOL, margin: float = 1e-6) -> np.ndarray:
    """Exit rates ``r(i) > 0`` with ``sum_i r(i) w_i = -lam`` for jump matrix ``p``.

    Any solution ``a`` of ``(I - p.T) a = -lam`` can be shifted along the
    stationary vector of ``p``; the shift is the first of ``0, 1, 2, 4, ...``
    that lifts every rate to at least ``margin``.
    """
    p = np.array(p, dtype=float)
    lam = np.array(lam, dtype=float).ravel()
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != lam.size:
        raise NotStochastic(f"p must be square and match lam, got {p.shape} and {lam.shape}")
    if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > tol) or np.any(np.diag(p) != 0):
        raise NotStochastic("p must be nonnegative with zero diagonal and unit row sums")
    if p.shape[0] > 1:
        try:
            _check_strongly_connected(p, [str(k) for k in range(p.shape[0])])
        except ModelError as exc:
            raise NotStochastic(f"p is not irreducible: {exc}") from None
    if abs(lam.sum()) > tol * max(1.0, np.abs(lam).max()):
        raise DriftNotBalanced(f"drift sums to {lam.sum():.3e}, expected 0")

    m = np.eye(p.shape[0]) - p.T
    a = np.linalg.lstsq(m, -lam, rcond=None)[0]
    mu = _stationary(p)
    s = 0.0
    while (a + s * mu).min() < margin:
        s = 1.0 if s == 0.0 else 2.0 * s
        if s > 2.0**80:
            raise ConsistencyFailure("no positive shift found")
    return a + s * mu
