//! Numerical laboratory for minimizers of the two-phase singular energy
//! `∫ |∇u|² + 2λ⁺(u⁺)^p + 2λ⁻(u⁻)^p` on the half-disk `B_R ∩ {x1 > 0}` with
//! `u = 0` on the flat part of the boundary.
//!
//! The pipeline is [`domain::build_grid`] → [`minimize::minimize`] →
//! [`freeboundary::extract_free_boundary`] → the checks in [`analysis`].
//! [`cli`] strings them together behind a config file.

pub mod analysis;
pub mod cli;
pub mod domain;
pub mod energy;
pub mod error;
pub mod field;
pub mod freeboundary;
mod linalg;
pub mod minimize;

pub use domain::{build_grid, DomainSpec, Grid, Point};
pub use energy::EnergyParams;
pub use error::{Error, Result};
pub use field::ScalarField;
