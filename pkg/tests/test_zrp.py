import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from zrpfluid import (
    EventLog,
    HorizonExceeded,
    JumpRateFunction,
    ModelError,
    convergence_experiment,
    initial_configuration,
    rescaled_path,
    simulate_zrp,
    validate_rates,
)
from zrpfluid._backend import KERNELS
from zrpfluid.zrp import trial_seed

BACKENDS = sorted(KERNELS)


def birth_death_mean(n_particles, g, up, down):
    """Mean occupation of site 0 in a two-site ZRP, from its exact stationary law.

    Site 0 with k particles loses one at rate g(k) * down and gains one at
    rate g(N - k) * up.
    """
    w = np.ones(n_particles + 1)
    for k in range(1, n_particles + 1):
        w[k] = w[k - 1] * g(n_particles - k + 1) * up / (g(k) * down)
    w /= w.sum()
    return float(w @ np.arange(n_particles + 1))


class TestJumpRates:
    def test_constant(self):
        g = JumpRateFunction.constant()
        assert [g(n) for n in range(4)] == [0, 1, 1, 1]

    def test_evans(self):
        g = JumpRateFunction.evans(2)
        assert g(0) == 0 and g(1) == 3 and g(2) == 2 and g(10**6) == pytest.approx(1, abs=1e-5)
        np.testing.assert_allclose(g.lookup(3), [0, 3, 2, 5 / 3])

    def test_table(self):
        g = JumpRateFunction.table([2.0, 1.5])
        assert [g(n) for n in range(5)] == [0, 2.0, 1.5, 1, 1]

    @pytest.mark.parametrize(
        "make",
        [
            lambda: JumpRateFunction.evans(0),
            lambda: JumpRateFunction.table([0.5]),
            lambda: JumpRateFunction.table([2.0], tail=1.5),
            lambda: JumpRateFunction("sqrt"),
        ],
    )
    def test_invalid(self, make):
        with pytest.raises(ModelError):
            make()

    def test_dict_roundtrip(self):
        for g in (JumpRateFunction.constant(), JumpRateFunction.evans(2.5), JumpRateFunction.table([3, 2])):
            assert JumpRateFunction.from_dict(g.to_dict()) == g
        assert JumpRateFunction.from_dict(None) == JumpRateFunction.constant()


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8).filter(lambda x: sum(x) > 0), st.integers(1, 10**6))
def test_largest_remainder(weights, n_particles):
    u = np.array(weights) / sum(weights)
    eta = initial_configuration(u, n_particles)
    assert eta.sum() == n_particles and eta.min() >= 0
    assert np.abs(eta / n_particles - u).max() <= 1 / n_particles + 1e-12


class TestSimulation:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_conservation(self, example_w, backend):
        g = JumpRateFunction.evans(2)
        ev = simulate_zrp(example_w, g, [50, 20, 30], 500.0, seed=1, backend=backend)
        counts = ev.counts_at(np.concatenate(([0.0], ev.times)))
        assert np.all(counts.sum(axis=1) == 100)
        assert counts.min() >= 0
        # every jump leaves an occupied site along a positive rate
        assert np.all(counts[:-1][np.arange(len(ev)), ev.src] >= 1)
        assert np.all(example_w.rates[ev.src, ev.dst] > 0)
        assert np.all(np.diff(ev.times) > 0) and ev.times[-1] <= 500.0

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_seed_determinism(self, example_w, backend):
        g = JumpRateFunction.constant()
        a = simulate_zrp(example_w, g, [10, 0, 0], 3e4, seed=42, backend=backend)
        b = simulate_zrp(example_w, g, [10, 0, 0], 3e4, seed=42, backend=backend)
        assert len(a) > 40000  # spans several kernel chunks
        assert a.times.tobytes() == b.times.tobytes()
        assert a.src.tobytes() == b.src.tobytes() and a.dst.tobytes() == b.dst.tobytes()
        c = simulate_zrp(example_w, g, [10, 0, 0], 3e4, seed=43, backend=backend)
        assert c.times[:10].tobytes() != a.times[:10].tobytes()

    @pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
    def test_backends_agree_bitwise(self, example_w):
        for g in (JumpRateFunction.constant(), JumpRateFunction.evans(2), JumpRateFunction.table([4, 3, 2])):
            a = simulate_zrp(example_w, g, [30, 5, 0], 2e4, seed=9, backend="python")
            b = simulate_zrp(example_w, g, [30, 5, 0], 2e4, seed=9, backend="cython")
            assert a.times.tobytes() == b.times.tobytes()
            assert a.src.tobytes() == b.src.tobytes() and a.dst.tobytes() == b.dst.tobytes()

    def test_single_particle_follows_jump_chain(self, example_w):
        ev = simulate_zrp(example_w, JumpRateFunction.evans(2), [0, 1, 0], 2e4, seed=3)
        from_mid = ev.dst[ev.src == 1]
        assert abs(np.mean(from_mid == 0) - 0.5) < 4 * np.sqrt(0.25 / from_mid.size)
        # g(1) = 3 speeds the walk up threefold: mean holding time 1 / (3 * 2)
        holds = np.diff(np.concatenate(([0.0], ev.times)))
        assert holds.mean() == pytest.approx(1 / 6, rel=0.03)

    def test_two_site_symmetric_occupation(self, two_site):
        g = JumpRateFunction.constant()
        target = birth_death_mean(10, g, 1.0, 1.0)
        assert target == pytest.approx(5.0)
        ev = simulate_zrp(two_site, g, [10, 0], 4e5, seed=5)
        batches = np.array(
            [ev.occupation_fractions(k * 1e4, (k + 1) * 1e4)[0] * 10 for k in range(1, 40)]
        )
        sigma = batches.std(ddof=1) / np.sqrt(batches.size)
        assert abs(batches.mean() - target) < 3 * sigma

    def test_evans_two_site_occupation(self):
        r = validate_rates([[0, 1], [2, 0]])
        g = JumpRateFunction.evans(2)
        target = birth_death_mean(6, g, 2.0, 1.0)
        ev = simulate_zrp(r, g, [3, 3], 3e5, seed=8)
        batches = np.array([ev.occupation_fractions(k * 1e4, (k + 1) * 1e4)[0] * 6 for k in range(1, 30)])
        sigma = batches.std(ddof=1) / np.sqrt(batches.size)
        assert abs(batches.mean() - target) < 3 * sigma

    def test_jackson_departures_are_poisson(self):
        # site 0 is the bottleneck and never empties; its departures form a Poisson(r(0)) stream
        r = validate_rates([[0, 1], [3, 0]])
        ev = simulate_zrp(r, JumpRateFunction.constant(), [300, 0], 3000.0, seed=12)
        assert ev.counts_at(ev.times)[:, 0].min() >= 1
        gaps = np.diff(ev.times[ev.src == 0])
        edges = stats.expon.ppf(np.linspace(0, 1, 11), scale=1.0)
        observed = np.histogram(gaps, bins=edges)[0]
        expected = np.full(10, gaps.size / 10)
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_bad_inputs(self, example_w):
        g = JumpRateFunction.constant()
        with pytest.raises(ModelError):
            simulate_zrp(example_w, g, [0, 0, 0], 10.0)
        with pytest.raises(ModelError):
            simulate_zrp(example_w, g, [1, 0], 10.0)
        with pytest.raises(ModelError):
            simulate_zrp(example_w, g, [1, 0, 0], np.inf)
        with pytest.raises(ValueError):
            simulate_zrp(example_w, g, [1, 0, 0], 1.0, backend="fortran")


class TestRescaling:
    def test_initial_sample(self, example_w):
        ev = simulate_zrp(example_w, JumpRateFunction.constant(), [7, 2, 1], 50.0, seed=0)
        sp = rescaled_path(ev, 10, [0.0, 1.0, 5.0])
        np.testing.assert_array_equal(sp.points[0], [0.7, 0.2, 0.1])
        assert np.allclose(sp.points.sum(axis=1), 1.0)

    def test_frozen_log(self):
        ev = EventLog(np.array([4, 0]), np.empty(0), np.empty(0, np.int32), np.empty(0, np.int32), 100.0)
        sp = rescaled_path(ev, 4, np.linspace(0, 25, 6))
        np.testing.assert_array_equal(sp.points, np.tile([1.0, 0.0], (6, 1)))

    def test_horizon(self, example_w):
        ev = simulate_zrp(example_w, JumpRateFunction.constant(), [10, 0, 0], 20.0, seed=0)
        with pytest.raises(HorizonExceeded):
            rescaled_path(ev, 10, [0.0, 2.5])

    def test_example_w_midpoint(self, example_w):
        n = 10**4
        mids = []
        for k in range(7):
            ev = simulate_zrp(example_w, JumpRateFunction.constant(), [n, 0, 0], 0.5 * n, seed=trial_seed(0, n, k))
            mids.append(rescaled_path(ev, n, [0.5]).points[0])
        assert np.abs(np.median(mids, axis=0) - [0.5, 0.5, 0.0]).max() <= 0.05


class TestConvergenceExperiment:
    def test_reproducible_and_parallel(self, example_w):
        args = (example_w, JumpRateFunction.constant(), [1, 0, 0], [50, 200], 1.0, 4, 17)
        a = convergence_experiment(*args)
        b = convergence_experiment(*args, workers=2)
        assert a.rows == b.rows
        assert [(n, k) for n, k, _ in a.rows] == [(n, k) for n in (50, 200) for k in range(4)]
        assert [s["trials"] for s in a.summary()] == [4, 4]

    def test_frozen_start(self, example_w):
        res = convergence_experiment(example_w, JumpRateFunction.constant(), [0, 1, 0], [10**4], 2.0, 10, 0)
        assert res.summary()[0]["median"] <= 0.05

    def test_seed_streams_distinct(self):
        seeds = {tuple(trial_seed(3, n, k).generate_state(2)) for n in (100, 1000) for k in range(20)}
        assert len(seeds) == 40
