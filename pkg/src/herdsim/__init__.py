"""Multi-agent herding simulation engine and experiment harness.

Herders are second-order agents steered by damped elastic forces in polar
coordinates; targets are first-order diffusive agents repelled by every
herder.  Four target-selection strategies decide which target each herder
chases.  The harness reproduces trial batches, robustness sweeps and a
differential-drive robot replica, with metrics, figures and delimited
outputs.
"""

from .dynamics import Arena, HerderState, ModelParams, TargetState
from .geometry import Polar, convex_hull_area, sector_contains, to_polar, wrap_angle
from .harness import (
    BatchResult,
    BatchStats,
    ExperimentSpec,
    SweepCell,
    SweepResult,
    config_with,
    load_config,
    run_batch,
    run_sweep,
)
from .metrics import MetricsReport, behavioral_index, classify_pair
from .robot import RegulatorGains, RobotTrajectory, UnicycleState, run_robot_trial
from .selection import Assignment, StrategyKind, reassign
from .simulation import (
    SimulationConfig,
    SimulationDiverged,
    Trajectory,
    WorldState,
    init_world,
    run_trial,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Arena",
    "Assignment",
    "BatchResult",
    "BatchStats",
    "ExperimentSpec",
    "HerderState",
    "MetricsReport",
    "ModelParams",
    "Polar",
    "RegulatorGains",
    "RobotTrajectory",
    "SimulationConfig",
    "SimulationDiverged",
    "StrategyKind",
    "SweepCell",
    "SweepResult",
    "TargetState",
    "Trajectory",
    "UnicycleState",
    "WorldState",
    "behavioral_index",
    "classify_pair",
    "config_with",
    "convex_hull_area",
    "init_world",
    "load_config",
    "reassign",
    "run_batch",
    "run_robot_trial",
    "run_sweep",
    "run_trial",
    "sector_contains",
    "step",
    "to_polar",
    "wrap_angle",
    "__version__",
]
