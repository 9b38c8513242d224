"""Packet-dropout traces, the actuator-side buffer machine, and closed-loop
simulation in both buffer form and switched augmented form.

The two simulators are deliberately independent routes to the same state
sequence; their agreement is the module's central cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ProtocolError
from .plant import DiscretePlant
from .stability import GainSchedule, build_switched


@dataclass(frozen=True, eq=False)
class DropTrace:
    """Realized packet delivery sequence, bounded to < M_drop consecutive drops."""

    delivered: np.ndarray  # bool per sampling instant
    M_drop: int

    def __post_init__(self):
        d = np.asarray(self.delivered, dtype=bool)
        if d.ndim != 1 or d.size < 1:
            raise ConfigError("delivered must be a non-empty 1-d boolean sequence")
        if self.M_drop < 1:
            raise ConfigError("M_drop must be >= 1")
        if not d[0]:
            raise ConfigError("the first packet must be delivered")
        run = 0
        for ok in d:
            run = 0 if ok else run + 1
            if run >= self.M_drop:
                raise ConfigError(
                    f"trace contains {run} consecutive drops, but M_drop={self.M_drop}"
                )
        object.__setattr__(self, "delivered", d)

    def __len__(self) -> int:
        return self.delivered.size

    @property
    def effective_times(self) -> np.ndarray:
        return np.nonzero(self.delivered)[0]


def generate_drop_trace(length: int, p_drop: float, M_drop: int, seed: int) -> DropTrace:
    """Seeded Bernoulli drop process with the consecutive-drop bound enforced.

    Each instant draws uniform r in [0,1) and drops the packet iff r < p_drop,
    except that instant 0 and any instant following M_drop - 1 consecutive
    drops are forced delivered (no draw is consumed on forced instants).
    """
    if not (0.0 <= p_drop < 1.0):
        raise ConfigError("p_drop must lie in [0, 1)")
    if length < 1 or M_drop < 1:
        raise ConfigError("length and M_drop must be >= 1")
    rng = np.random.default_rng(seed)
    delivered = np.empty(length, dtype=bool)
    delivered[0] = True
    run = 0
    for k in range(1, length):
        if run >= M_drop - 1:
            ok = True
        else:
            ok = not (rng.random() < p_drop)
        delivered[k] = ok
        run = 0 if ok else run + 1
    return DropTrace(delivered, M_drop)


@dataclass(frozen=True, eq=False)
class BufferState:
    """Actuator-side buffer: latest packet's slots plus the read index rho."""

    slots: object  # sequence of M_drop control values
    last_update_time: int
    rho: int


def buffer_step(b: BufferState | None, k: int, arrival=None):
    """Advance the buffer one sampling instant.

    On arrival the slots are replaced and the read index resets to 1; on a
    miss the read index advances and the next predicted value is applied.
    Returns (applied control value, updated BufferState).
    """
    if arrival is not None:
        nb = BufferState(arrival, k, 1)
        return nb.slots[0], nb
    if b is None:
        raise ProtocolError("buffer read before any effective packet")
    rho = b.rho + 1
    if rho > len(b.slots):
        raise ProtocolError(f"buffer exhausted: read index {rho} exceeds depth {len(b.slots)}")
    nb = BufferState(b.slots, b.last_update_time, rho)
    return nb.slots[rho - 1], nb


def mode_sequence(trace: DropTrace) -> np.ndarray:
    """Buffer read depth (switched mode sigma) at each instant of a trace."""
    modes = np.empty(len(trace), dtype=int)
    rho = 0
    for k, ok in enumerate(trace.delivered):
        rho = 1 if ok else rho + 1
        modes[k] = rho
    return modes


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray  # (N+1, n)
    controls: np.ndarray  # (N, m)
    modes: np.ndarray  # (N,), values in 1..M_drop

    def __post_init__(self):
        if not (len(self.states) == len(self.controls) + 1 == len(self.modes) + 1):
            raise ConfigError("inconsistent trajectory lengths")


def _check_compat(p: DiscretePlant, gains: GainSchedule, trace: DropTrace):
    if gains.n != p.n or gains.m != p.m:
        raise ConfigError(
            f"gain dimensions ({gains.m}x{gains.n}) do not match plant "
            f"({p.m} inputs, order {p.n})"
        )
    if gains.M_drop != trace.M_drop:
        raise ConfigError(
            f"gain schedule depth {gains.M_drop} != trace M_drop {trace.M_drop}"
        )


def simulate_closed_loop(p: DiscretePlant, gains: GainSchedule, trace: DropTrace) -> Trajectory:
    """Step-by-step simulation through the buffer machine.

    At each effective instant the controller packs {K_q x} for q = 1..M_drop;
    the buffer applies one slot per step and the plant advances.
    """
    _check_compat(p, gains, trace)
    F, G, Ks = p.F, p.G, gains.gains
    N = len(trace)
    states = np.empty((N + 1, p.n))
    controls = np.empty((N, p.m))
    modes = np.empty(N, dtype=int)
    x = p.x0.copy()
    states[0] = x
    buf = None
    for k in range(N):
        arrival = Ks @ x if trace.delivered[k] else None
        u, buf = buffer_step(buf, k, arrival)
        controls[k] = u
        modes[k] = buf.rho
        x = F @ x + G @ u
        states[k + 1] = x
    return Trajectory(states, controls, modes)


def simulate_switched(p: DiscretePlant, gains: GainSchedule, trace: DropTrace) -> Trajectory:
    """Simulation via the augmented switched system Gamma(k+1) = Phi_sigma Gamma(k)."""
    _check_compat(p, gains, trace)
    scl = build_switched(p, gains)
    modes = mode_sequence(trace)
    n, M = p.n, gains.M_drop
    N = len(trace)
    states = np.empty((N + 1, n))
    controls = np.empty((N, p.m))
    gamma = np.zeros(n * M)
    gamma[:n] = p.x0
    states[0] = p.x0
    for k in range(N):
        z = modes[k]
        # the applied control is K_z times the state the packet was built from
        anchor = gamma[(z - 1) * n : z * n]
        controls[k] = gains.gains[z - 1] @ anchor
        gamma = scl.phis[z - 1] @ gamma
        states[k + 1] = gamma[:n]
    return Trajectory(states, controls, modes)
