//! Samplers for random subsets of ℤ^d and their finite-box realizations.

pub mod lattice;
pub mod periodic;
pub mod poisson;
pub mod presets;
pub mod spec;

pub use lattice::{LatticeBox, PointSet};
pub use poisson::{sample_poisson, PoissonSample};
pub use spec::{
    draw_polynomial, CutProjectSpec, PolynomialSpec, Probability, Process, ProcessSpec, Realization,
};
