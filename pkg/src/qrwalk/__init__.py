"""Coined quantum walks on finite graphs, their exactly equivalent
non-homogeneous random walks, and trajectory sampling on top of them."""

from .baselines import (
    RejectionReport,
    TorusDPState,
    exact_rejection_marginals,
    grover_torus_dp,
    grover_torus_matrix,
    rejection_sample,
)
from .coins import (
    check_coin_unitary,
    grover_coin,
    hadamard_coin,
    identity_coin,
    random_unitary_coin,
)
from .equivalence import (
    PropertyReport,
    TransitionMatrix,
    TransitionMatrixSeq,
    build_multiwalker_matrix,
    build_sequence,
    build_transition_matrix,
    verify_theorem_properties,
)
from .errors import (
    ApplicabilityError,
    ConfigError,
    ConsistencyError,
    GraphError,
    QRWalkError,
    ResourceLimitError,
    SamplingError,
    UnitarityError,
    ValidationError,
)
from .graphs import (
    PortGraph,
    ProductGraph,
    build_graph,
    complete_graph,
    cycle_graph,
    graph_from_json,
    graph_hash,
    graph_to_json,
    product_degree,
    random_regular_graph,
    torus_graph,
)
from .trajectory import (
    ConvergenceReport,
    Trajectory,
    TrajectoryEnsemble,
    convergence_report,
    empirical_distribution,
    locality_fraction,
    sample_ensemble,
    sample_trajectory,
    total_variation,
)
from .walk import (
    CoinSpec,
    InteractionSpec,
    ShiftSpec,
    WaveFunction,
    apply_coin,
    apply_interaction,
    apply_shift,
    step,
    vertex_distribution,
)

__version__ = "0.1.0"
