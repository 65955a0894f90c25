"""Continuum q-colour Potts / random-cluster simulation and verification toolkit."""

__version__ = "0.1.0"

from .geometry import Box, cell_side_for_dimension
from .potentials import PairPotential
from .model import (
    ModelParams,
    PointConfig,
    ColoredConfig,
    ball_volume,
    energy_delta_delete,
    energy_delta_insert,
    hamiltonian,
    hamiltonian_phi,
    hamiltonian_psi,
    validate_assumptions,
    widom_rowlinson_preset,
)
from .sampling import RngStream, sample_marked_poisson, sample_poisson
from .coupling import (
    ClusterDecomposition,
    EdgeSet,
    bernoulli_edge_probability,
    conditional_edge_probability,
    decompose_clusters,
    gcrcm_weight,
    holley_pointwise_check,
    recolor_clusters,
    sample_edges,
)
from .lattice import (
    CoarseGrain,
    LatticeState,
    coarse_grain,
    compute_nstar,
    er_connectivity,
    simulate_site_bond,
    theta_estimate,
)
from .mcmc import ChainState, Schedule, run_chain, step_birth_death_move, sweep_swendsen_wang
from .oracle import (
    EnumerationTable,
    compute_h,
    enumerate_joint,
    verify_color_connectivity_identity,
    verify_gcrcm_projection,
    verify_potts_projection,
)
from .estimators import (
    ObservableAccumulator,
    count_max_colors,
    identity_test,
    occupation_test,
    phase_transition_experiment,
    record,
)
