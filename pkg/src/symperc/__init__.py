"""Verification lab for cluster-size comparison on symmetric graphs.

Exposes the building blocks: graph builders, permutation-group machinery
with the symmetry-condition checker, the exact enumeration engine, the
Monte Carlo engine, and the scenario harnesses behind the CLI.
"""

from .exact import (
    BOND,
    SITE,
    CapExceeded,
    JointOutcomePolynomial,
    PartitionLaw,
    check_domination,
    check_partition_identity,
    check_ratio_identity,
    connection_probability,
    enumerate_joint,
    eval_joint,
    expected_sizes,
    random_cluster_law,
)
from .graphs import (
    Graph,
    GraphError,
    boundary,
    build_graph,
    bunkbed_graph,
    cartesian_product,
    complete_graph,
    cycle_graph,
    cylinder_graph,
    distance,
    hypercube_graph,
    path_graph,
    torus_graph,
)
from .groups import (
    FamilyPair,
    GroupSplit,
    PermGroup,
    SymmetryReport,
    VertexSetPair,
    check_symmetry_conditions,
    generate_group,
    is_automorphism,
    orbit,
    split_group,
    stabilizer_orbit,
    verify_double_counting,
    verify_orbit_product,
)
from .mc import (
    EmpiricalJoint,
    McEstimate,
    estimate_connection,
    estimate_joint,
    mc_domination_verdict,
    sample_cluster,
)
from .scenarios import (
    CValues,
    Scenario,
    bunkbed_report,
    discrete_derivative,
    group_theorem_battery,
    hypercube_c_values,
    hypercube_inequality_report,
    layered_report,
    run_scenario,
    z2_relation_report,
)

__version__ = "0.1.0"
