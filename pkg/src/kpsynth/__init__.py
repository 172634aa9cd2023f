"""Time-optimal control synthesis on symmetric spaces with numerical verification."""

from .cartan import (
    CartanDecomposition,
    CartanSubalgebraChoice,
    RestrictedRootSystem,
    cartan_involution,
    cartan_project,
    commutant_condition,
    commutant_period,
    compute_roots,
    make_subalgebra,
    verify_decomposition,
)
from .lie import (
    AlgebraElement,
    GeneratorBasis,
    GroupElement,
    adjoint_matrix,
    commutator,
    euler_conjugate,
    group_exp,
    group_log,
    killing_form,
)
from .presets import basis_preset, decomposition_preset, load_basis, load_decomposition
from .simulate import (
    PropagationReport,
    PulseSchedule,
    convergence_order,
    phase_aligned_distance,
    propagate,
    verify_solution,
)
from .synth import (
    SynthesisProblem,
    SynthesisSolution,
    grid_oracle,
    hamiltonian_at,
    solve,
    sweep_su2,
    target_from_unitary,
    turning_rate,
)

__version__ = "0.1.0"
