//! Finite truncations of direct systems of glued cell complexes, with exact
//! chain metrics and quantitative checks.
//!
//! The building blocks are in [`lattice`] (tilings and cells), [`gluing`]
//! (the relations `R_j` and their cosets), [`complex`] (the quotient
//! complexes `X_j`) and [`metric`] (chain distances). [`galleries`],
//! [`analysis`] and [`verify`] run the higher-level suites.

pub mod analysis;
pub mod complex;
pub mod config;
pub mod galleries;
pub mod gluing;
pub mod lattice;
pub mod metric;
pub mod report;
pub mod suites;
pub mod svg;
pub mod verify;

use num_rational::Ratio;

/// Exact rational scalar used for coordinates and lengths.
pub type Q = Ratio<i128>;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resolution overflow: {0}")]
    ResolutionOverflow(String),
    #[error("coset grew past {0} members")]
    CosetTooLarge(usize),
    #[error("search exceeded {0} states")]
    SearchTooLarge(usize),
    #[error("no gallery within budget {0}")]
    NotFound(usize),
    #[error("generation range exhausted at depth {0}")]
    DepthExceeded(i32),
    #[error("sample landed on a grid line: {0}")]
    SampleOnGrid(String),
    #[error("not an upper gradient: {0}")]
    NotUpperGradient(String),
    #[error("cover misses point {0}")]
    CoverageGap(String),
    #[error("config: {0}")]
    Config(String),
}

pub use lattice::{BoxQ, CellId, ExactPoint, Family, SystemParams};

/// `Q` to `f64`.
pub fn qf(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Shorthand for `a/b`.
pub fn q(a: i128, b: i128) -> Q {
    Q::new(a, b)
}
