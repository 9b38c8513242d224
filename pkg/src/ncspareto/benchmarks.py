"""Published benchmark gain schedules for the three built-in plants.

For every plant there are nine solutions, three per design trade-off:
A/B/C span the reported Pareto front from the first-objective extreme to
the other.  In each trade-off the first objective increases A -> B -> C
and the second decreases, which is what the reproduction report checks.
"""

from __future__ import annotations

from .errors import ConfigError
from .stability import GainSchedule

SOLUTION_LABELS = ("A", "B", "C")

# label -> trade-off of the study that produced it
TRADE_OFF_OF = {"1": "J1J2", "2": "J3J2", "3": "J4J5"}

# plant -> solution label -> flat gains (K11, K12, K21, K22, K31, K32)
PUBLISHED_GAINS: dict[str, dict[str, tuple]] = {
    "dc_motor": {
        "A1": (-0.155, 0.003, -0.047, 0.036, -0.152, -0.040),
        "B1": (-0.040, 0.021, -0.035, 0.010, -0.065, -0.042),
        "C1": (-0.026, 0.013, -0.038, -0.001, -0.044, -0.045),
        "A2": (-0.104, -0.015, -0.100, -0.012, -0.116, -0.039),
        "B2": (-0.071, -0.009, -0.077, -0.021, -0.087, -0.049),
        "C2": (-0.058, -0.007, -0.058, -0.035, -0.080, -0.048),
        "A3": (-0.091, -0.009, -0.074, 0.022, -0.127, -0.051),
        "B3": (-0.116, 0.026, -0.054, 0.075, -0.135, -0.012),
        "C3": (-0.178, 0.029, -0.069, 0.075, -0.120, -0.012),
    },
    "double_integrator": {
        "A1": (-1.534, -1.650, -1.179, -2.644, -3.497, -2.730),
        "B1": (-0.994, -1.670, -0.658, -1.279, -1.374, -2.164),
        "C1": (-0.253, -0.741, -0.439, -0.970, -0.139, -0.719),
        "A2": (-2.660, -1.593, -0.814, -1.233, -2.401, -1.476),
        "B2": (-1.678, -1.624, -0.917, -1.480, -1.540, -1.721),
        "C2": (-0.309, -0.686, -0.417, -0.962, -0.161, -0.627),
        "A3": (-0.949, -1.425, -0.598, -0.867, -0.707, -1.366),
        "B3": (-1.086, -1.644, -0.355, -1.301, -2.343, -1.723),
        "C3": (-1.784, -1.276, -1.127, -2.745, -3.318, -2.731),
    },
    "inverted_pendulum": {
        "A1": (-2.486, -2.322, -2.068, -1.047, -1.847, -1.878),
        "B1": (-2.370, -2.229, -1.468, -1.028, -1.929, -1.843),
        "C1": (-2.010, -2.048, -1.288, -1.052, -1.797, -1.804),
        "A2": (-3.115, -1.015, -1.914, -0.872, -2.749, -1.198),
        "B2": (-2.644, -1.746, -1.927, -1.280, -2.201, -1.686),
        "C2": (-1.976, -2.021, -1.911, -1.945, -1.928, -1.971),
        "A3": (-2.982, -1.571, -2.511, -2.130, -1.859, -3.151),
        "B3": (-2.906, -1.569, -2.492, -2.142, -1.883, -3.161),
        "C3": (-3.005, -1.574, -2.552, -2.176, -1.867, -3.158),
    },
}

# plant -> solution label -> reported (first, second) objective values of its
# trade-off.  These stem from single stochastic optimizer evaluations at an
# unstated horizon, so they are ordering references, not value targets:
# adjacent entries closer than NEAR_TIE_REL are statistical ties.
PUBLISHED_OBJECTIVES: dict[str, dict[str, tuple]] = {
    "dc_motor": {
        "A1": (5.393, 0.090), "B1": (33.123, 0.028), "C1": (62.284, 0.019),
        "A2": (2.000, 0.056), "B2": (2.076, 0.040), "C2": (2.524, 0.032),
        "A3": (2.000, 13.950), "B3": (2.406, 9.350), "C3": (3.268, 7.050),
    },
    "double_integrator": {
        "A1": (4.716, 5.623), "B1": (6.525, 1.251), "C1": (20.022, 1.094),
        "A2": (1.939, 8.816), "B2": (1.946, 2.510), "C2": (1.954, 1.076),
        "A3": (2.000, 5.900), "B3": (2.024, 5.280), "C3": (2.176, 4.570),
    },
    "inverted_pendulum": {
        "A1": (5.579, 3.597), "B1": (6.389, 2.354), "C1": (8.942, 2.002),
        "A2": (1.938, 26.993), "B2": (1.964, 5.676), "C2": (2.000, 2.002),
        "A3": (2.000, 6.300), "B3": (2.028, 6.050), "C3": (2.251, 5.650),
    },
}

NEAR_TIE_REL = 0.02

M_DROP = 3
STATE_DIM = 2


def published_schedule(plant_name: str, label: str) -> GainSchedule:
    try:
        flat = PUBLISHED_GAINS[plant_name][label]
    except KeyError:
        raise ConfigError(
            f"unknown benchmark solution {plant_name!r}/{label!r}"
        ) from None
    return GainSchedule.from_flat(flat, M_DROP, STATE_DIM)


def ordering_holds(plant_name: str, labels, means) -> bool:
    """Check simulated mean objectives against the published orderings.

    Every adjacent pair of published values that differs by more than
    NEAR_TIE_REL (relative) fixes a direction the simulated means must
    reproduce; closer published pairs are statistical ties and unordered.
    """
    pub = PUBLISHED_OBJECTIVES[plant_name]
    for m in range(2):
        for la, lb in zip(labels, labels[1:]):
            pa, pb = pub[la][m], pub[lb][m]
            if abs(pb - pa) / max(abs(pa), abs(pb)) < NEAR_TIE_REL:
                continue
            if (means[lb][m] > means[la][m]) != (pb > pa):
                return False
    return True


def trade_off_groups(plant_name: str) -> dict[str, list]:
    """Solution labels of one plant grouped by trade-off, in A, B, C order."""
    if plant_name not in PUBLISHED_GAINS:
        raise ConfigError(f"unknown benchmark plant {plant_name!r}")
    return {
        TRADE_OFF_OF[suffix]: [f"{lab}{suffix}" for lab in SOLUTION_LABELS]
        for suffix in ("1", "2", "3")
    }
