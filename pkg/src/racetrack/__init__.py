"""Simulation and design toolkit for a storage-loop multiplexed photon source.

Layers
------
``racetrack.optics``
    Photon-pair statistics, heralding, and switch transfer matrices.
``racetrack.timing``
    Loss/survival arithmetic and the timing budget of the storage loop.
``racetrack.analytics``
    Closed-form design quantities: pump-cycle and switch budgets, and the
    end-to-end delivery probability for both storage policies.
``racetrack.simulator``
    Discrete-event Monte Carlo with deterministic, chunk-invariant RNG,
    per-cycle event logs, and a schedule validator.
``racetrack.sweep``
    Parameter-grid sweeps (analytic or Monte Carlo) with CSV/JSONL output
    and the bundled figure presets.
``racetrack.cli``
    The ``racetrack`` command-line interface.
"""

from .analytics import (
    ExperimentPlan,
    OutputModel,
    binomial_cdf,
    binomial_pmf,
    build_output_model,
    output_probability,
    pump_cycles_for_target,
    required_switches,
)
from .errors import ConfigurationError, ParameterError, UsageError
from .optics import (
    HeraldModel,
    MziTransfer,
    PairDistribution,
    SpdcParams,
    equal_up_to_global_phase,
    herald_click_probability,
    heralded_single_purity,
    mzi_transfer,
    pair_distribution,
    zeta_from_pump,
)
from .simulator import (
    CycleEventLog,
    CycleRecord,
    RacetrackConfig,
    SimulationResult,
    SwitchBank,
    SwitchMode,
    SwitchState,
    reset_source,
    simulate,
    validate_schedule,
)
from .sweep import SweepGrid, SweepRow, figure_preset, run_sweep, write_csv, write_jsonl
from .timing import (
    LossParams,
    TimingParams,
    cycle_time,
    inner_loop_delay,
    loop_survival,
    repetition_time,
    survival_probability,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ParameterError",
    "ConfigurationError",
    "UsageError",
    # optics
    "SpdcParams",
    "PairDistribution",
    "HeraldModel",
    "MziTransfer",
    "zeta_from_pump",
    "pair_distribution",
    "herald_click_probability",
    "heralded_single_purity",
    "mzi_transfer",
    "equal_up_to_global_phase",
    # timing
    "LossParams",
    "TimingParams",
    "survival_probability",
    "loop_survival",
    "cycle_time",
    "inner_loop_delay",
    "repetition_time",
    # analytics
    "ExperimentPlan",
    "OutputModel",
    "pump_cycles_for_target",
    "required_switches",
    "binomial_pmf",
    "binomial_cdf",
    "build_output_model",
    "output_probability",
    # simulator
    "RacetrackConfig",
    "SimulationResult",
    "SwitchMode",
    "SwitchState",
    "SwitchBank",
    "CycleRecord",
    "CycleEventLog",
    "simulate",
    "validate_schedule",
    "reset_source",
    # sweep
    "SweepGrid",
    "SweepRow",
    "run_sweep",
    "figure_preset",
    "write_csv",
    "write_jsonl",
]
