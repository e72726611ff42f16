"""Kinematic tracking control for a quadcopter-mounted delta arm.

The package couples three pieces:

* an error envelope and a preset error trajectory that shape how the
  end-effector tracking error is allowed to decay,
* a sliding-mode tracking law that turns the shaped error into an
  end-effector velocity command,
* a box-constrained QP that splits that command between vehicle and
  arm references, fed to a first-order-lag plant surrogate.

``aerodelta.harness.run_scenario`` wires them into a closed loop; the
``aerodelta`` CLI drives it from scenario files.
"""

from ._kernels import BACKEND
from .allocation import (
    AllocationInfeasibleError,
    AllocationProblem,
    BoundsModel,
    QPSolution,
    assemble,
    default_weights,
    integrate_references,
    objective,
    solve,
)
from .delta_arm import (
    DeltaGeometry,
    JointLimitError,
    MountingConfig,
    RigState,
    UnreachableError,
    composite_fk,
    delta_fk,
    delta_ik,
    jacobian,
)
from .envelope import EnvelopeParams, make_envelope, rho_at
from .plant import (
    Measurement,
    NoiseParams,
    NoiseStream,
    PlantParams,
    derive_seed,
    hover_state,
    measure,
    pack_state,
    plant_advance,
    unpack_state,
)
from .harness import (
    BatchReport,
    Diagnostics,
    RunError,
    RunMetrics,
    RunResult,
    TerminalWindowError,
    Trace,
    batch,
    convergence_time,
    metrics_from_trace,
    read_trace_csv,
    run_scenario,
    sweep,
    terminal_error,
    write_trace_csv,
)
from .preset import PresetTrajectory, alpha_at, choose_c
from .scenario import (
    Scenario,
    ScenarioError,
    default_bounds,
    load_scenario,
    packaged_names,
    random_scenario,
    scenario_from_dict,
    scenario_to_dict,
    shipped_plant,
    with_noise,
)
from .tracking import (
    TrackingGains,
    TrackingState,
    clik_velocity,
    control_step,
    delta_z_bound,
    fresh_state,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationInfeasibleError",
    "AllocationProblem",
    "BACKEND",
    "BatchReport",
    "BoundsModel",
    "DeltaGeometry",
    "Diagnostics",
    "EnvelopeParams",
    "JointLimitError",
    "Measurement",
    "MountingConfig",
    "NoiseParams",
    "NoiseStream",
    "PlantParams",
    "PresetTrajectory",
    "QPSolution",
    "RigState",
    "RunError",
    "RunMetrics",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "TerminalWindowError",
    "Trace",
    "TrackingGains",
    "TrackingState",
    "UnreachableError",
    "__version__",
    "alpha_at",
    "assemble",
    "batch",
    "choose_c",
    "clik_velocity",
    "composite_fk",
    "control_step",
    "convergence_time",
    "default_bounds",
    "default_weights",
    "delta_fk",
    "delta_ik",
    "delta_z_bound",
    "derive_seed",
    "fresh_state",
    "hover_state",
    "integrate_references",
    "jacobian",
    "load_scenario",
    "make_envelope",
    "measure",
    "metrics_from_trace",
    "objective",
    "pack_state",
    "packaged_names",
    "plant_advance",
    "random_scenario",
    "read_trace_csv",
    "rho_at",
    "run_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "shipped_plant",
    "solve",
    "sweep",
    "terminal_error",
    "unpack_state",
    "with_noise",
    "write_trace_csv",
]
