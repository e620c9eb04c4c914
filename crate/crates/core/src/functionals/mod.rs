//! Conserved energies, the localizing weights, the Helmholtz inverse, and the
//! identities and inequalities behind the monotonicity argument.

mod energy;
mod helmholtz;
mod identities;
mod weight;

pub use energy::{
    cubic_density, default_lambdas, energy_density, energy_e, energy_f, profile_energy_checks,
    localized_functionals, FunctionalSample, ProfileEnergyCheck,
};
pub use helmholtz::{check_h_dominance, helmholtz_inverse};
pub use identities::{
    derivative_identity_check, identity_rhs, identity_trajectory, weighted_energies,
    IdentityResiduals,
};
pub use weight::{
    build_weight_family, default_scale, resolve_scale, sigma0, Centers, ProfileCheck,
    ShiftedWeight, TanhWeight, UnitWeight, Weight, WeightFamily, WeightProfile, RATIO_BOUND,
};
