"""Level-set reachability and range maximisation for hybrid systems with a
switching lag, instantiated for range-extender electric vehicles."""

from hybridreach.admissibility import (
    AdmissibilityReport,
    HybridControlSeq,
    SwitchDecision,
    is_admissible,
    lock_trajectory,
)
from hybridreach.dp import SolveReport, ValueField, solve
from hybridreach.errors import (
    ConfigurationError,
    ControlDomainError,
    HybridReachError,
    InadmissibleControlError,
    NotReachableError,
    ReconstructionError,
    ValidationError,
)
from hybridreach.levelset import BallSet, BoxSet, StateGrid
from hybridreach.model import (
    EnergyState,
    EVOnly,
    ParametricParams,
    ParametricVehicle,
    ToyModel,
    ToyModelParams,
    parametric_vehicle,
)
from hybridreach.oracle import ToyAutonomyResult, enumerate_layer, enumerate_value, toy_autonomy
from hybridreach.profile import DrivingProfile, ProfileLink, constant_profile, load_profile
from hybridreach.reach import (
    MinTimeField,
    RangeReport,
    ReachableSlice,
    autonomy,
    min_time,
    range_report,
    reachable_slice,
)
from hybridreach.synth import HybridPoint, HybridTrajectory, forward_simulate, synthesize

__all__ = [
    "AdmissibilityReport",
    "BallSet",
    "BoxSet",
    "ConfigurationError",
    "ControlDomainError",
    "DrivingProfile",
    "EVOnly",
    "EnergyState",
    "HybridControlSeq",
    "HybridPoint",
    "HybridReachError",
    "HybridTrajectory",
    "InadmissibleControlError",
    "MinTimeField",
    "NotReachableError",
    "ParametricParams",
    "ParametricVehicle",
    "ProfileLink",
    "RangeReport",
    "ReachableSlice",
    "ReconstructionError",
    "SolveReport",
    "StateGrid",
    "SwitchDecision",
    "ToyModel",
    "ToyAutonomyResult",
    "ToyModelParams",
    "ValidationError",
    "ValueField",
    "autonomy",
    "constant_profile",
    "enumerate_layer",
    "enumerate_value",
    "forward_simulate",
    "is_admissible",
    "load_profile",
    "lock_trajectory",
    "min_time",
    "parametric_vehicle",
    "range_report",
    "reachable_slice",
    "solve",
    "synthesize",
    "toy_autonomy",
]
