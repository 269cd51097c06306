"""Continuous-time worldline Monte Carlo for transverse-field Ising models.

Production sampling lives in ``heatbath`` (exact worldline updates),
``chain`` (mixing schedules and sample collection) and ``estimators``
(observables and partition-function estimation).  ``trotter`` and ``exact``
are desk-scale oracles used to verify every probabilistic component.
"""

from .chain import (
    AboveThreshold,
    MixingPlan,
    RunReport,
    mixing_plan,
    sample_mu,
    sample_mu_thinned,
    sample_states,
    step,
)
from .estimators import (
    Estimate,
    PartitionEstimate,
    RatioWeight,
    StageEstimate,
    diagonal_observable,
    estimate_partition,
    ratio_weight,
    series_anchor,
)
from .exact import (
    ExactThermal,
    classical_gibbs,
    classical_partition,
    exact_thermal,
    hamiltonian,
    two_level_marginal_up,
)
from .heatbath import (
    BoundarySpins,
    JumpBudget,
    JumpBudgetExceeded,
    RetryLimitExceeded,
    TransferMatrix,
    jump_budget,
    resample_worldline,
    sample_boundaries,
    sample_subpath,
    transfer_matrix,
)
from .model import (
    CouplingStats,
    ModelError,
    ThresholdReport,
    TimModel,
    beta_thresholds,
    contraction_rate,
    coupling_stats,
    cure_sign,
    ghz_to_kelvin,
    load_model,
    random_model,
)
from .rng import make_rng, spawn_seeds
from .trotter import (
    ClassicalWeight,
    DiscreteConfig,
    SizeGuardError,
    classical_weight,
    conditional_energy,
    conditional_tv,
    exact_conditional,
    flip_phi,
    heatbath_kernel,
    periodic_flips,
    replica_marginal,
    trotter_partition,
    trotter_quantum_partition,
    validate_config,
    worldline_phi,
)
from .worldline import (
    PiecewiseField,
    PimcState,
    Worldline,
    diagonal_energy,
    diagonal_energy_integral,
    flat_state,
    local_field_profile,
    read_timeslice,
    spin_at,
    state_from_json,
    state_to_json,
    validate_state,
)

__all__ = [name for name in dir() if not name.startswith("_")]
