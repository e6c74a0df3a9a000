"""Finite-Markov-chain universes with interaction-closed high-level processes."""
from .builder import (
    BuildSpec,
    Fill,
    build_perfect_control_universe,
    build_universe,
    coinciding_universe,
    example_universe,
    maximize_control,
)
from .channels import (
    Channel,
    ExtremeSet,
    Partition,
    Relation,
    bayesian_inverse,
    channel_from_function,
    conditional_family,
    convex_membership,
    extreme_points,
    induced_partition,
    is_deterministic,
    partition_relation,
    recover_step_map,
)
from .markov import (
    Distribution,
    JointTable,
    StochasticMatrix,
    is_irreducible,
    marginalize,
    power_iteration,
    stationary_distribution,
    two_step_joint,
    validate_stochastic_matrix,
)
from .measures import (
    MeasureReport,
    cmi_entropy_form,
    conditional_mutual_information,
    conditional_next_entropy,
    entropy,
    informational_closure,
    interaction_closure,
    interaction_equalities,
    is_perfect_apparent_control,
    mutual_information,
    transfer_entropy,
)
from .universe import Universe, load_universe, make_universe, save_universe

__version__ = "0.1.0"
