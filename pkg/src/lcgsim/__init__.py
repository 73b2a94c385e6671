"""Simulation of continuous-variable quantum circuits with Gaussian combinations.

States are weighted sums of Gaussians in phase space (complex log-weights,
means and covariances at hbar = 2), which makes Gaussian channels cheap and
photon-number post-selection exact up to a controllable coherent-ring
approximation.
"""

from ._backend import COMPILED
from .characterize import (
    GkpOperatorSpec,
    char_fun,
    effective_squeezing,
    gkp_nonlinear_squeezing,
    overlap,
    photon_moments,
    purity,
    symmetric_effective_squeezing_db,
    wigner_grid,
)
from .errors import (
    DegenerateStateError,
    InvalidArgumentError,
    NumericalStabilityError,
    ReductionFailedError,
    UnphysicalStateError,
)
from .gbs import (
    CircuitSpec,
    OptimizationReport,
    basin_hop,
    bifurcation_herald,
    build_symplectic,
    cost_eval,
    herald,
    local_minimize,
    reoptimize_with_loss,
)
from .gradients import (
    GradientTape,
    attach_gradients,
    grad_char_fun,
    grad_effective_squeezing,
    grad_log_prob,
    grad_overlap,
)
from .measure import (
    herald_sequence,
    outcome_probability,
    post_select,
    post_select_homodyne,
)
from .povm import (
    Povm,
    click_povm,
    default_ring_radius,
    fock_coherent_povm,
    fock_superposition_coherent,
    fock_superposition_state,
    fock_thermal_povm,
    generaldyne,
    heterodyne,
    ppnrd_povm,
    ring_radius_for_infidelity,
    vacuum_projector,
)
from .state import LcogState, vacuum
from .stellar import coherent_to_fock, gaussian_to_coherent_outer, rank_reduce
from .symplectic import (
    HBAR,
    GaussianChannel,
    WilliamsonDecomposition,
    beamsplitter_symplectic,
    channel_gain,
    channel_loss,
    channel_random_displacement,
    d_displacement,
    d_symplectic,
    db_to_r,
    displacement_vector,
    is_symplectic,
    omega,
    r_to_db,
    rotation_symplectic,
    squeeze_symplectic,
    two_mode_squeeze_symplectic,
    williamson,
)

__version__ = "0.1.0"
