"""k-dimensional stable matching with cyclic preferences.

Agents of k types form a cycle; each agent ranks agents of the next type.
The package models complete and incomplete-list markets, verifies weak
stability, realizes the list-completing and dimension-lifting reductions
with matching transport, and ships desk-scale solvers plus a reproducible
experiment harness.
"""

from .core import (
    AgentRef,
    DimensionError,
    Family,
    FormatError,
    Instance,
    InvalidFamilyError,
    KdsmError,
    Matching,
    SpaceTooLargeError,
    TypeMismatchError,
    family_violations,
    instance_digest,
    parse_instance,
    parse_matching,
    partner,
    prefers,
    serialize_instance,
    serialize_matching,
    validate_instance,
    validate_matching,
)
from .genlab import (
    Certificate,
    ExperimentReport,
    certify_no_stable,
    count_instances,
    enumerate_instances,
    random_instance,
    random_matching,
    run_experiment,
    search_counterexample,
    serialize_report,
)
from .reductions import (
    CheckReport,
    CorrMap3K,
    GadgetMap,
    TransportFormError,
    check_admirer_bound,
    check_gadget_confinement,
    check_partner_correspondence,
    complete_instance,
    free_boundary_agents,
    induce_down,
    induce_up,
    lift_3_to_k,
    parse_map,
    row_shift,
    transport_matching,
)
from .solve import (
    Budget,
    SolveOutcome,
    SolveStatus,
    count_matchings,
    count_weakly_stable,
    enumerate_weakly_stable,
    find_weakly_stable,
)
from .verify import (
    StabilityVerdict,
    find_blocking_cycle,
    find_blocking_naive,
    is_strongly_blocking,
    is_weakly_stable,
)

__version__ = "0.1.0"

__all__ = [
    "AgentRef",
    "Budget",
    "Certificate",
    "CheckReport",
    "CorrMap3K",
    "DimensionError",
    "ExperimentReport",
    "Family",
    "FormatError",
    "GadgetMap",
    "Instance",
    "InvalidFamilyError",
    "KdsmError",
    "Matching",
    "SolveOutcome",
    "SolveStatus",
    "SpaceTooLargeError",
    "StabilityVerdict",
    "TransportFormError",
    "TypeMismatchError",
    "certify_no_stable",
    "check_admirer_bound",
    "check_gadget_confinement",
    "check_partner_correspondence",
    "complete_instance",
    "count_instances",
    "count_matchings",
    "count_weakly_stable",
    "enumerate_instances",
    "enumerate_weakly_stable",
    "family_violations",
    "find_blocking_cycle",
    "find_blocking_naive",
    "find_weakly_stable",
    "free_boundary_agents",
    "induce_down",
    "induce_up",
    "instance_digest",
    "is_strongly_blocking",
    "is_weakly_stable",
    "lift_3_to_k",
    "parse_instance",
    "parse_map",
    "parse_matching",
    "partner",
    "prefers",
    "random_instance",
    "random_matching",
    "row_shift",
    "run_experiment",
    "search_counterexample",
    "serialize_instance",
    "serialize_matching",
    "serialize_report",
    "transport_matching",
    "validate_instance",
    "validate_matching",
]
