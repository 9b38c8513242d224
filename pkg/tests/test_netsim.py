import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncspareto.errors import ConfigError, ProtocolError
from ncspareto.netsim import (
    BufferState,
    DropTrace,
    buffer_step,
    generate_drop_trace,
    mode_sequence,
    simulate_closed_loop,
    simulate_switched,
)
from ncspareto.plant import DiscretePlant, builtin_plant
from ncspareto.stability import GainSchedule

# Illustrative drop pattern over nine instants: effective packets at
# instants 1, 2, 4, 6, 9 (1-based), at most two consecutive misses.
DEMO_DELIVERED = [True, True, False, True, False, True, False, False, True]


def reference_simulator(p, gains, trace):
    """Independent step-by-step oracle: recompute every applied control from
    the most recent effective packet time, without the buffer machine."""
    x = p.x0.copy()
    xs = [x]
    last_eff = None
    for k in range(len(trace)):
        if trace.delivered[k]:
            last_eff = k
        rho = k - last_eff + 1
        u = gains.gains[rho - 1] @ xs[last_eff]
        x = p.F @ x + p.G @ u
        xs.append(x)
    return np.array(xs)


class TestDropTrace:
    def test_zero_drop_probability_delivers_everything(self):
        tr = generate_drop_trace(100, 0.0, 3, seed=1)
        assert tr.delivered.all()

    def test_mdrop_one_forces_all_delivered(self):
        tr = generate_drop_trace(100, 0.9, 1, seed=1)
        assert tr.delivered.all()

    def test_bound_and_stationary_drop_rate(self):
        # Markov oracle: state = consecutive drops before the instant;
        # s < M-1 drops w.p. p, s = M-1 forces delivery.
        p, M = 0.8, 3
        T = np.zeros((M, M))
        for s in range(M - 1):
            T[s + 1, s] = p
            T[0, s] += 1 - p
        T[0, M - 1] = 1.0
        pi = np.linalg.matrix_power(T, 200) @ np.ones(M) / M
        expected = p * pi[: M - 1].sum()
        tr = generate_drop_trace(100_000, p, M, seed=7)
        runs = np.diff(np.nonzero(tr.delivered)[0])
        assert runs.max() <= M
        got = 1.0 - tr.delivered.mean()
        assert got == pytest.approx(expected, abs=0.005)

    def test_rejects_bad_probability(self):
        with pytest.raises(ConfigError):
            generate_drop_trace(10, 1.0, 3, seed=0)

    def test_determinism(self):
        a = generate_drop_trace(500, 0.8, 3, seed=42)
        b = generate_drop_trace(500, 0.8, 3, seed=42)
        assert np.array_equal(a.delivered, b.delivered)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0, 0.95), st.integers(1, 5))
    def test_invariant_holds_for_any_seed(self, seed, p_drop, M):
        tr = generate_drop_trace(200, p_drop, M, seed=seed)
        assert tr.delivered[0]
        run = 0
        for ok in tr.delivered:
            run = 0 if ok else run + 1
            assert run < M

    def test_invariant_enforced_on_construction(self):
        with pytest.raises(ConfigError):
            DropTrace([True, False, False, True], M_drop=2)
        with pytest.raises(ConfigError):
            DropTrace([False, True], M_drop=3)


class TestBuffer:
    def run_pattern(self, delivered):
        """Drive the buffer symbolically and return (applied, remaining) rows."""
        rows = []
        buf = None
        p = 0
        for k, ok in enumerate(delivered):
            if ok:
                p = k + 1  # 1-based packet time label
                arrival = [f"u{p}{q}" for q in range(1, 4)]
            else:
                arrival = None
            applied, buf = buffer_step(buf, k, arrival)
            rows.append((applied, list(buf.slots[buf.rho :])))
        return rows

    def test_demo_pattern_reproduces_buffer_rows(self):
        rows = self.run_pattern(DEMO_DELIVERED)
        expected = [
            ("u11", ["u12", "u13"]),
            ("u21", ["u22", "u23"]),
            ("u22", ["u23"]),
            ("u41", ["u42", "u43"]),
            ("u42", ["u43"]),
            ("u61", ["u62", "u63"]),
            ("u62", ["u63"]),
            ("u63", []),
            ("u91", ["u92", "u93"]),
        ]
        assert rows == expected

    def test_arrival_every_instant_keeps_rho_one(self):
        buf = None
        for k in range(5):
            applied, buf = buffer_step(buf, k, [f"a{k}", f"b{k}", f"c{k}"])
            assert buf.rho == 1
            assert applied == f"a{k}"

    def test_exhausted_buffer_raises(self):
        _, buf = buffer_step(None, 0, ["p1", "p2"])
        _, buf = buffer_step(buf, 1)
        with pytest.raises(ProtocolError):
            buffer_step(buf, 2)

    def test_read_before_first_packet_raises(self):
        with pytest.raises(ProtocolError):
            buffer_step(None, 0)


class TestSimulation:
    def setup_method(self):
        self.plant = builtin_plant("dc_motor")
        self.gains = GainSchedule.from_flat(
            [-0.155, 0.003, -0.047, 0.036, -0.152, -0.040], 3, 2
        )

    def test_zero_gains_give_open_loop(self):
        zero = GainSchedule(np.zeros((3, 1, 2)))
        tr = generate_drop_trace(20, 0.8, 3, seed=3)
        traj = simulate_closed_loop(self.plant, zero, tr)
        x = self.plant.x0.copy()
        for k in range(20):
            assert np.allclose(traj.states[k], x)
            x = self.plant.F @ x
        assert np.all(traj.controls == 0)

    def test_no_drops_uses_only_first_gain(self):
        tr = generate_drop_trace(30, 0.0, 3, seed=0)
        traj = simulate_closed_loop(self.plant, self.gains, tr)
        A = self.plant.F + self.plant.G @ self.gains.gains[0]
        x = self.plant.x0.copy()
        for k in range(31):
            assert np.allclose(traj.states[k], x, atol=1e-12)
            x = A @ x
        assert np.all(traj.modes == 1)

    def test_demo_pattern_mode_sequence(self):
        tr = DropTrace(DEMO_DELIVERED, M_drop=3)
        assert mode_sequence(tr).tolist() == [1, 1, 2, 1, 2, 1, 2, 3, 1]
        traj = simulate_closed_loop(self.plant, self.gains, tr)
        assert traj.modes.tolist() == [1, 1, 2, 1, 2, 1, 2, 3, 1]

    def test_against_independent_reference_simulator(self):
        tr = DropTrace(DEMO_DELIVERED, M_drop=3)
        traj = simulate_closed_loop(self.plant, self.gains, tr)
        ref = reference_simulator(self.plant, self.gains, tr)
        assert np.allclose(traj.states, ref, rtol=1e-12, atol=1e-12)

    def test_switched_equals_closed_loop_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            M = int(rng.integers(1, 4))
            F = rng.uniform(-1, 1, (2, 2))
            G = rng.uniform(-1, 1, (2, 1))
            p = DiscretePlant(F, G, 0.05, rng.uniform(-2, 2, 2))
            g = GainSchedule(rng.uniform(-1, 1, (M, 1, 2)))
            tr = generate_drop_trace(100, 0.7, M, seed=int(rng.integers(1 << 30)))
            a = simulate_closed_loop(p, g, tr)
            b = simulate_switched(p, g, tr)
            assert np.allclose(a.states, b.states, rtol=1e-9, atol=1e-12)
            assert np.allclose(a.controls, b.controls, rtol=1e-9, atol=1e-12)
            assert np.array_equal(a.modes, b.modes)

    def test_switched_reduces_to_single_mode_for_mdrop_one(self):
        g = GainSchedule.from_flat([-0.1, 0.01], 1, 2)
        tr = generate_drop_trace(25, 0.5, 1, seed=2)
        traj = simulate_switched(self.plant, g, tr)
        A = self.plant.F + self.plant.G @ g.gains[0]
        x = self.plant.x0.copy()
        for k in range(26):
            assert np.allclose(traj.states[k], x, atol=1e-12)
            x = A @ x

    def test_simulation_determinism(self):
        tr = generate_drop_trace(200, 0.8, 3, seed=9)
        a = simulate_closed_loop(self.plant, self.gains, tr)
        b = simulate_closed_loop(self.plant, self.gains, tr)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.controls, b.controls)

    def test_dimension_mismatch_rejected(self):
        bad = GainSchedule(np.zeros((3, 1, 4)))
        tr = generate_drop_trace(5, 0.0, 3, seed=0)
        with pytest.raises(ConfigError):
            simulate_closed_loop(self.plant, bad, tr)
        with pytest.raises(ConfigError):
            simulate_closed_loop(self.plant, self.gains, generate_drop_trace(5, 0.0, 2, seed=0))
