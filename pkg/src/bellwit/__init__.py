"""Multipartite two-outcome Bell inequalities: exact local bounds, stabilizer
synthesis from graph states, analytic witness bounds, and see-saw lower
bounds on quantum values."""

__version__ = "0.1.0"

from .bellexpr import (
    BellExpression,
    DepthCertificate,
    EnumerationCapError,
    LocalBoundResult,
    TRIVIAL,
    certify_depth,
    evaluate_deterministic,
    lift,
    local_bound,
    paradox_local_bound,
    producible_to_separable,
    separable_to_producible,
)
from .qcore import (
    HermitianOperator,
    ObservableAssignment,
    StateVector,
    bell_operator,
    bell_value,
    born_probability,
    correlator,
    make_ghz,
    make_ghz_nd,
    make_ghz_theta,
    make_graph_state,
    make_w,
    tensor_product,
)
from .witness_gamma import (
    AnsatzParams,
    GammaWitness,
    ansatz_observables,
    build_expression,
    find_dmin,
    find_dmin_optimized,
    gme_criterion_odd_d,
    kproducible_bounds,
    numeric_quantum_bound,
    optimal_quantum_bound,
    quantum_value_formula,
    qudit_observables,
    unbalanced_ghz_scan,
)
from .graphwit import (
    Graph,
    ParadoxSelection,
    PauliString,
    SynthesizedInequality,
    biseparable_saturation,
    build_paradox_expression,
    catalog,
    complete_graph,
    generator,
    g3_graph,
    g4_graph,
    linear_graph,
    map_to_correlator,
    ring_graph,
    search_paradox_selections,
    stabilizer_element,
    stabilizer_set,
    three_setting_expression,
    verify_paradox,
)
from .seesaw import (
    OptimizationResult,
    Partition,
    SeesawConfig,
    enumerate_partitions,
    full_seesaw,
    kproducible_lower_bound,
    maximal_partitions,
    optimize_observables,
    optimize_state,
)
