"""Observability and controllability analysis of networked LTI systems."""

from .construct import (
    ConstructOptions,
    construct_controllable,
    construct_observable,
    design_observing_matrix,
    kappa_bound,
    partition_outputs,
)
from .criteria import (
    full_analysis,
    lemma5_necessary_obs,
    theorem1_sufficient_obs,
    theorem2_necessary_ctrb,
    theorem2_sufficient_ctrb,
)
from .lifted import (
    Status,
    lift,
    lifted_controllability,
    lifted_observability,
    max_geometric_multiplicity,
    pbh_controllable,
    pbh_observable,
    verify_lemma3,
)
from .model import (
    Interconnection,
    NetworkedSystem,
    SubsystemRealization,
    check_well_posedness,
    normalize_interconnection,
    out_degree_weights,
    validate,
)
from .numerics import Tolerances
from .selection import check_budget, min_local_io
from .spectra import (
    evaluate,
    fcnr,
    gamma_ctrb,
    gamma_obs,
    group_zeros,
    make_block,
    null_basis,
    transmission_zeros,
    zero_groups,
)

__version__ = "0.1.0"
