//! Peakon trains, uniform grids and scenario construction.

mod grid;
mod scenario;
mod train;

pub use grid::{sample_on_grid, Grid, GridField, Kink, Point};
pub use scenario::{build_perturbed_scenario, PerturbationMode, PerturbedTrain, Scenario};
pub use train::{
    h1_distance, h1_distance_to_profile, h1_inner_closed_form, h1_norm_sq_of_combination, sgn,
    PeakonTrain,
};

pub(crate) use train::gram_inner;
