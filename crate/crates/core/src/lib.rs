//! Exact tools for tropical (max-plus) mixtures of star tree metrics.
//!
//! * [`metric`]: dissimilarity maps, the four-point calculus and the
//!   entrywise-max mixture.
//! * [`tree`]: star, double-star and general weighted trees, classification
//!   and reconstruction.
//! * [`mixture`]: offsets, the eight parametrized fiber families, and the
//!   two-star decision procedure.
//! * [`oracle`]: an exhaustive exact k-star feasibility oracle, the
//!   second-hypersimplex point configuration and secant membership.
//! * [`io`]: file and JSON formats.
//!
//! Taxa are 0-based in the Rust API and 1-based in every file and report.

pub mod io;
pub mod metric;
pub mod mixture;
pub mod oracle;
pub mod rational;
pub mod tree;

pub use metric::DissimilarityMap;
pub use rational::Rational;
pub use tree::{DoubleStar, Regime, StarTree, WeightedTree};
