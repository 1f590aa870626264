"""orbitkit: symbolic-numeric analysis of integrable Hamiltonian systems
on R^{2n} with the canonical symplectic structure.

The pieces: an expression language for the integrals (orbitkit.expr),
involution / rank / commutant tests (hamiltonian), numerically
integrated flows and orbit exploration (flow), grid-sampled fibers and
their connected components (fibers), and the discretized orbit space
with its projection, induced map and equivalence tests (quotient).
"""

from .expr import (
    EvalDomainError,
    Expr,
    ExprError,
    ParseError,
    PhaseVariables,
    UnknownVariableError,
    differentiate,
    evaluate,
    is_identically_zero,
    parse,
    simplify,
    to_source,
)
from .fibers import (
    BifurcationTable,
    ComponentLabeling,
    FiberSample,
    OrbitFiberReport,
    bifurcation_scan,
    connected_components,
    fiber_component_count,
    orbit_vs_fiber_check,
    sample_fiber,
)
from .flow import (
    CompletenessReport,
    OrbitSample,
    Trajectory,
    completeness_probe,
    conservation_check,
    integrate_flow,
    orbit_dimension,
    orbit_explore,
)
from .grids import Box, CellGrid, LatticeSpec
from .hamiltonian import (
    IntegrableSystem,
    InvolutionReport,
    RankReport,
    VectorFieldExpr,
    check_involution,
    commutant_test,
    hamiltonian_vector_field,
    jacobian_rank,
    poisson_bracket,
    rank_scan,
)
from .quotient import (
    ClosednessReport,
    EquivalenceVerdict,
    FunctionRingPresentation,
    MuBijectivityReport,
    OrbitSpace,
    SymplecticCheckReport,
    build_orbit_space,
    canonical_structure_matrix,
    check_factorization,
    image_closedness_probe,
    mu_bijectivity_test,
    symplectic_equivalence_check,
    systems_equivalent,
)

__version__ = "0.1.0"
