"""Decentralized multi-access coded caching: delivery simulation, rates and lower bounds."""

from .delivery import (
    TransmissionLog,
    decode_user,
    generate_transmissions,
    leader_count,
    measured_rate_per_user,
    verify_delivery,
)
from .indexcoding import (
    alpha_count,
    build_E_sets,
    build_instance,
    check_generalized_independence,
    construct_independent_set,
)
from .model import (
    CacheSubsetTable,
    DemandVector,
    SystemParams,
    canonicalize_profile,
    cyclic_profile,
    table_from_vector,
)
from .polynomial import RatePolynomial
from .prefetch import PrefetchState, SymbolicState, decentralized_prefetch, expected_subfile_fraction
from .rates import (
    NotApplicable,
    build_A_sets,
    closed_form_optimal,
    cyclic_lower_bound,
    lower_bound_per_user,
    optimality_gap,
    rate_per_user,
    shared_caching_rate,
)

__version__ = "0.1.0"
