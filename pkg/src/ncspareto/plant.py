"""LTI plant models, zero-order-hold discretization, and the built-in benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import mat_exp


def _matrix(v, name: str) -> np.ndarray:
    M = np.asarray(v, dtype=float)
    if M.ndim != 2:
        raise ConfigError(f"{name} must be a 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ConfigError(f"{name} entries must be finite")
    return M


@dataclass(frozen=True, eq=False)
class ContinuousPlant:
    """Continuous-time LTI plant dx/dt = A x + B u."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = _matrix(self.A, "A")
        B = _matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise ConfigError("A must be square")
        if B.shape[0] != A.shape[0]:
            raise ConfigError("B row count must match the order of A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class DiscretePlant:
    """Sampled LTI plant x(k+1) = F x(k) + G u(k)."""

    F: np.ndarray
    G: np.ndarray
    Ts: float
    x0: np.ndarray = field(default=None)

    def __post_init__(self):
        F = _matrix(self.F, "F")
        G = _matrix(self.G, "G")
        if F.shape[0] != F.shape[1]:
            raise ConfigError("F must be square")
        if G.shape[0] != F.shape[0]:
            raise ConfigError("G row count must match the order of F")
        if not (np.isfinite(self.Ts) and self.Ts > 0):
            raise ConfigError("Ts must be a positive number")
        x0 = np.zeros(F.shape[0]) if self.x0 is None else np.asarray(self.x0, float).ravel()
        if x0.shape != (F.shape[0],) or not np.all(np.isfinite(x0)):
            raise ConfigError("x0 must be a finite vector matching the plant order")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "Ts", float(self.Ts))
        object.__setattr__(self, "x0", x0)

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[1]

    def with_x0(self, x0) -> "DiscretePlant":
        return DiscretePlant(self.F, self.G, self.Ts, x0)


def zoh_discretize(p: ContinuousPlant, Ts: float) -> DiscretePlant:
    """Exact zero-order-hold discretization at sampling period Ts.

    F and G come jointly from the exponential of the augmented matrix
    [[A, B], [0, 0]] * Ts; x0 is left at zero for the caller to assign.
    """
    if not (np.isfinite(Ts) and Ts > 0):
        raise ConfigError("Ts must be a positive number")
    n, m = p.n, p.m
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = p.A
    aug[:n, n:] = p.B
    E = mat_exp(aug, Ts)
    return DiscretePlant(E[:n, :n], E[:n, n:], Ts)


# Default initial condition used throughout the benchmark studies.
DEFAULT_X0 = (3.0, -2.0)

# Continuous-time benchmark plants.
BUILTIN_CONTINUOUS: dict[str, ContinuousPlant] = {
    "dc_motor": ContinuousPlant([[0.0, 1.0], [1.0, -217.4]], [[0.0], [1669.5]]),
    "double_integrator": ContinuousPlant([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]]),
    "inverted_pendulum": ContinuousPlant([[0.0, 1.0], [1.0, 0.0]], [[0.0], [1.0]]),
}

# Discrete-time benchmark plants, carried verbatim as published (3-4 decimal
# rounding included) so benchmark reproduction is insulated from re-derivation.
# Note the double integrator's published G[0] (1e-4) differs from the exact
# ZOH value (Ts^2/2 = 5e-5); the discretizer returns the exact value.
_BUILTIN_DISCRETE = {
    "dc_motor": ([[1.0002, 0.0046], [0.0046, 0.0]], [[0.3487], [7.6807]], 0.05),
    "double_integrator": ([[1.0, 0.01], [0.0, 1.0]], [[0.0001], [0.01]], 0.01),
    "inverted_pendulum": ([[1.0013, 0.05], [0.05, 1.0013]], [[0.0013], [0.05]], 0.05),
}

BUILTIN_NAMES = tuple(_BUILTIN_DISCRETE)


def builtin_plant(name: str) -> DiscretePlant:
    """Benchmark plant by name, with the default initial state [3, -2]."""
    try:
        F, G, Ts = _BUILTIN_DISCRETE[name]
    except KeyError:
        raise ConfigError(
            f"unknown plant {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        ) from None
    return DiscretePlant(F, G, Ts, DEFAULT_X0)
