//! Numerical laboratory for ordered antipeakon-peakon trains of the Camassa-Holm
//! equation.
//!
//! Trains evolve under the exact multipeakon ODE; grid quadrature evaluates the
//! conserved and localized functionals, a Newton solver recovers modulation
//! parameters, and the harness checks the stability estimates over time.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod modulation;
pub mod peakon;

pub use error::{Error, Result};
