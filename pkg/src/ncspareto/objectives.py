"""Time-domain cost functionals and Monte-Carlo evaluation of a gain schedule.

Five costs over a finite horizon: time-weighted absolute state error,
control energy, smoothness residual against a moving average, normalized
peak magnitude, and confirmed settling time.  A schedule without a
Lyapunov certificate is not simulated at all; it receives the penalty
value in both objective slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .netsim import Trajectory, generate_drop_trace, simulate_closed_loop
from .plant import DiscretePlant
from .stability import GainSchedule

TRADE_OFFS = ("J1J2", "J3J2", "J4J5")


@dataclass(frozen=True)
class EvalConfig:
    horizon: float = 20.0  # seconds of simulated time per run
    mc_runs: int = 10
    p_drop: float = 0.8
    settling_band: float = 0.02
    settling_confirm: int = 10
    ma_span: int = 5
    penalty: float = 1e9
    peak_epsilon: float = 0.01

    def __post_init__(self):
        if not (self.horizon > 0):
            raise ConfigError("horizon must be positive")
        if self.mc_runs < 1:
            raise ConfigError("mc_runs must be >= 1")
        if not (0.0 <= self.p_drop < 1.0):
            raise ConfigError("p_drop must lie in [0, 1)")
        if self.ma_span < 3 or self.ma_span % 2 == 0:
            raise ConfigError("ma_span must be odd and >= 3")
        if self.settling_confirm < 1:
            raise ConfigError("settling_confirm must be >= 1")


@dataclass(frozen=True)
class ObjectiveVector:
    values: tuple  # (J_a, J_b) for the configured trade-off
    feasible: bool


def j1_itae(traj: Trajectory, Ts: float) -> float:
    """Time-weighted absolute state cost, summed over states and steps."""
    k = np.arange(traj.states.shape[0]) * Ts
    return float(np.sum(k[:, None] * np.abs(traj.states)))


def j2_energy(traj: Trajectory) -> float:
    """Total squared control effort."""
    return float(np.sum(traj.controls**2))


def moving_average(series, span: int) -> np.ndarray:
    """Centered moving average with shrinking symmetric windows at the edges."""
    if span % 2 == 0:
        raise ConfigError("span must be odd")
    s = np.asarray(series, dtype=float).ravel()
    L = s.size
    half = (span - 1) // 2
    out = np.empty(L)
    for i in range(L):
        w = min(i, L - 1 - i, half)
        out[i] = s[i - w : i + w + 1].mean()
    return out


def j3_smoothness(traj: Trajectory, span: int) -> float:
    """Euclidean norm of the raw-minus-smoothed residual, summed over states."""
    total = 0.0
    for l in range(traj.states.shape[1]):
        series = traj.states[:, l]
        total += float(np.linalg.norm(series - moving_average(series, span)))
    return total


def j4_peak(traj: Trajectory, x0, peak_epsilon: float) -> float:
    """Peak state magnitudes normalized by initial values (epsilon-guarded)."""
    x0 = np.asarray(x0, dtype=float).ravel()
    peaks = np.max(np.abs(traj.states), axis=0)
    denom = np.where(np.abs(x0) > peak_epsilon, x0, peak_epsilon)
    return float(np.sum(np.abs(peaks / denom)))


def j5_settling(traj: Trajectory, Ts: float, band: float, confirm: int) -> float:
    """Sum of per-state settling times with window confirmation.

    ST_l is the first instant where ``confirm`` consecutive samples all stay
    below the band; a state that is never confirmed contributes the horizon.
    """
    n_steps = traj.states.shape[0]
    horizon = (n_steps - 1) * Ts
    total = 0.0
    for l in range(traj.states.shape[1]):
        a = np.abs(traj.states[:, l])
        st = horizon
        if n_steps >= confirm:
            inside = a < band
            # window max < band <=> all samples in the window are inside
            ok = np.convolve(inside.astype(int), np.ones(confirm, int), "valid") == confirm
            hits = np.nonzero(ok)[0]
            if hits.size:
                st = hits[0] * Ts
        total += st
    return float(total)


def objective_pair(
    traj: Trajectory, pair: str, Ts: float, x0, cfg: EvalConfig
) -> tuple[float, float]:
    """Evaluate the two costs of the named trade-off on one trajectory."""
    if pair == "J1J2":
        return j1_itae(traj, Ts), j2_energy(traj)
    if pair == "J3J2":
        return j3_smoothness(traj, cfg.ma_span), j2_energy(traj)
    if pair == "J4J5":
        return (
            j4_peak(traj, x0, cfg.peak_epsilon),
            j5_settling(traj, Ts, cfg.settling_band, cfg.settling_confirm),
        )
    raise ConfigError(f"unknown trade-off {pair!r}; choose from {TRADE_OFFS}")


def horizon_steps(cfg: EvalConfig, Ts: float) -> int:
    return max(1, int(round(cfg.horizon / Ts)))


def evaluate(
    gains: GainSchedule,
    plant: DiscretePlant,
    pair: str,
    cfg: EvalConfig,
    feasible: bool,
    seeds,
) -> ObjectiveVector:
    """Monte-Carlo mean of the selected objective pair over seeded drop traces.

    Infeasible (uncertified) schedules are penalized without simulation.
    """
    seeds = list(seeds)
    if len(seeds) != cfg.mc_runs:
        raise ConfigError(f"expected {cfg.mc_runs} seeds, got {len(seeds)}")
    if not feasible:
        return ObjectiveVector((cfg.penalty, cfg.penalty), False)
    steps = horizon_steps(cfg, plant.Ts)
    acc = np.zeros(2)
    for seed in seeds:
        trace = generate_drop_trace(steps, cfg.p_drop, gains.M_drop, seed)
        traj = simulate_closed_loop(plant, gains, trace)
        acc += objective_pair(traj, pair, plant.Ts, plant.x0, cfg)
    a, b = acc / len(seeds)
    return ObjectiveVector((float(a), float(b)), True)
