pub mod affine;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod polymap;
pub mod processes;
pub mod rng;
pub mod stats;
pub mod torus;
