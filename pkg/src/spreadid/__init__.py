"""Identification of delay-Doppler sparse linear operators.

End-to-end pipeline: probing-sequence design, structured measurement
matrices, channel simulation, Zak-domain measurement assembly, joint-sparse
support recovery (subspace, greedy, and exhaustive-oracle solvers),
spreading-function reconstruction, and a Monte Carlo experiment harness.
"""

from .model import (
    DiscreteSpreadingFunction,
    GridParams,
    SupportSet,
    UnknownMatrix,
    pack_unknowns,
    random_spreading,
    random_support,
    unpack_unknowns,
)
from .probing import (
    EnumerationBudgetError,
    MeasurementMatrix,
    ProbingSequence,
    RowSubset,
    alltop,
    build_matrix,
    column_submatrix,
    random_disc,
    row_submatrix,
    spark_exhaustive,
)
from .pipeline import (
    MeasurementEnsemble,
    NoiseMeta,
    ReceivedSignal,
    add_noise,
    assemble_Z,
    discrete_zak,
    probe_samples,
    simulate,
)
from .solvers import (
    Diagnostics,
    RecoveryResult,
    SolverOptions,
    compressive_recover,
    estimate_rank,
    mmv_music,
    mmv_omp,
    p0_oracle,
    reconstruct,
    spreading_from_result,
)
from .analysis import (
    AmbiguityWitness,
    StabilityBounds,
    ambiguous_instance,
    relative_sq_error,
    stability_bounds,
    uniqueness_guaranteed,
)
from .harness import (
    CompressiveConfig,
    ExperimentConfig,
    SweepRow,
    TrialRecord,
    run_sweep,
    run_trial,
    trial_rng,
)

__version__ = "0.1.0"
