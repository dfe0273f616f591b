//! Single-commodity toll pricing on directed networks.
//!
//! A leader sets tolls on a designated subset of arcs; a follower then
//! travels along a shortest source-sink path, paying the tolls on it. The
//! crate computes the `(½·log2 m + 1)`-approximate pricing by recursive
//! path splitting together with its exact guarantee, exact optima for
//! small networks, and generators for the standard instance families.

pub mod exact;
pub mod explore;
pub mod generators;
pub mod graph;
pub mod pathmodel;
pub mod tollalg;

pub use exact::{brute_force_path_revenue, enumerate_simple_paths, exact_opt, ExactResult};
pub use explore::{alpha, alpha_balanced, explore_descendants, solve, Solution};
pub use graph::{build_network, int, ratio, Arc, ArcKind, Cost, Network, NetworkError, PathSeq, Rational, TollRegime};
pub use pathmodel::{decompose, lp_bound, TollAssignment, TollLevel, ValidPath};
