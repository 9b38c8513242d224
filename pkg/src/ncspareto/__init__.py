"""Predictive gain-schedule synthesis for networked control systems with
bounded random packet dropouts: switched-Lyapunov LMI certification and
NSGA-II Pareto tuning of conflicting time-domain objectives."""

from .benchmarks import PUBLISHED_GAINS, published_schedule, trade_off_groups
from .errors import ConfigError, NumericalError, ProtocolError
from .moga import (
    Individual,
    OptimizerConfig,
    ParetoArchive,
    crowding_distance,
    dominates,
    evolve,
    fast_non_dominated_sort,
    run_nsga2,
    tournament_select,
    vary,
)
from .netsim import (
    BufferState,
    DropTrace,
    Trajectory,
    buffer_step,
    generate_drop_trace,
    mode_sequence,
    simulate_closed_loop,
    simulate_switched,
)
from .objectives import (
    EvalConfig,
    ObjectiveVector,
    evaluate,
    j1_itae,
    j2_energy,
    j3_smoothness,
    j4_peak,
    j5_settling,
    moving_average,
)
from .plant import (
    ContinuousPlant,
    DiscretePlant,
    builtin_plant,
    zoh_discretize,
)
from .stability import (
    GainSchedule,
    LyapunovCertificate,
    SwitchedClosedLoop,
    build_switched,
    certify,
    lyapunov_sequence,
    schur_precheck,
    verify_certificate,
)

__version__ = "0.1.0"
