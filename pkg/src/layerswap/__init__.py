"""Simulator and planner for layer-wise CPU-to-GPU parameter-swapping
inference pipelines: closed-form timing, two-engine pipeline simulation,
VRAM-budget residency planning, and linear latency prediction."""

from .analytic import (
    BenefitEntry,
    LowerBound,
    Position,
    consecutive_limit,
    crossover_tokens,
    lower_bound,
    module_time_full_offload,
    phase_time_full_offload,
    residency_benefit,
)
from .dfbsim import (
    Engine,
    Mode,
    Placement,
    SimConfig,
    SimEvent,
    Timeline,
    VramReport,
    simulate,
    simulated_total,
    vram_report,
    write_trace,
)
from .planner import (
    Candidate,
    InfeasibleBudgetError,
    Plan,
    SweepPoint,
    interleaved_indices,
    plan_for_budget,
    rank_candidates,
    sweep,
)
from .predictor import (
    Prediction,
    ValidationReport,
    ValidationRow,
    predict,
    read_measured_sweep,
    resolve_intercept,
    slope_from_profile,
    validate,
)
from .profile import (
    HardwareProfile,
    ModelProfile,
    ModuleKind,
    ModuleProfile,
    PhaseClass,
    PhaseKind,
    PhaseProfile,
    ProfileError,
    classify,
    load_profile,
    module_kind,
    save_profile,
)

__version__ = "0.1.0"

__all__ = [
    "BenefitEntry", "LowerBound", "Position", "consecutive_limit",
    "crossover_tokens", "lower_bound", "module_time_full_offload",
    "phase_time_full_offload", "residency_benefit",
    "Engine", "Mode", "Placement", "SimConfig", "SimEvent", "Timeline",
    "VramReport", "simulate", "simulated_total", "vram_report", "write_trace",
    "Candidate", "InfeasibleBudgetError", "Plan", "SweepPoint",
    "interleaved_indices", "plan_for_budget", "rank_candidates", "sweep",
    "Prediction", "ValidationReport", "ValidationRow", "predict",
    "read_measured_sweep", "resolve_intercept", "slope_from_profile", "validate",
    "HardwareProfile", "ModelProfile", "ModuleKind", "ModuleProfile",
    "PhaseClass", "PhaseKind", "PhaseProfile", "ProfileError", "classify",
    "load_profile", "module_kind", "save_profile",
    "__version__",
]
