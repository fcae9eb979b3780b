"""Analytic time evolution of two oscillators with cross-Kerr coupling,
verified against a truncated-Fock-space brute-force propagator."""

from .branches import (
    KerrPolar,
    NumericalError,
    PhotonBranch,
    bogoliubov_constant,
    bogoliubov_general,
    compute_branch,
    polar_g2,
    theta2,
)
from .config import (
    ConfigError,
    DimensionfulConfig,
    SystemConfig,
    config_hash,
    format_config,
    load_config,
    parse_config,
    rescale,
    thermal_r,
)
from .fock import (
    FockSpace,
    FockState,
    MechOperators,
    PropagatorOptions,
    apply_decoupled,
    block_hamiltonian,
    build_mech_operators,
    displacement_matrix,
    expect_b,
    expect_phonons,
    fidelity,
    full_hamiltonian,
    prepare_initial,
    propagate,
    purity,
    reduced_mech,
    su11_disentangle,
)
from .observables import (
    compute_branches,
    delta_phonon_no_squeezing,
    linear_entropy,
    mean_b,
    phonon_number,
    poisson_cutoff,
)
from .profiles import (
    ConstantProfile,
    PiecewiseProfile,
    ProfileError,
    SinusoidProfile,
    TabulatedProfile,
    parse_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
