//! Search based on evidence (SBE) on 2D grids.
//!
//! A single target cell hides in a grid; evidence cells, all within a known
//! Chebyshev radius of the target, tell a searcher that the target is close.
//! This crate provides the problem generator and visit oracle, fractal
//! triangular search together with six baseline searchers, an evolutionary
//! parameter tuner, a Monte Carlo campaign harness, and a template-matching
//! front end that turns grayscale images into search spaces.

pub mod bench;
pub mod grid;
pub mod instance;
pub mod oracle;
pub mod search;
pub mod seed;
pub mod template;
pub mod tuner;

pub use grid::{chebyshev, Coord, Dims};
pub use instance::{
    expected_exhaustive_visits, generate_instance, probability_bounds, validate_instance, Instance, Violation,
};
pub use oracle::{Oracle, SearchSpace, VisitOutcome};
pub use search::{run_search, Algorithm, Params, SearchOutcome};
