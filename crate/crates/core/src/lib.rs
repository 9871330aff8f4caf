//! Randomized hypercube embedding into bipartite hosts.
//!
//! The crate is organized around a bit-parallel bipartite graph core and
//! three embedding routes: plain dependent random choice, the Q/W/R
//! embedder for hosts with non-condensed common neighborhoods, and the
//! facet-wise block embedder. The trichotomy driver decides which route a
//! given host supports and emits a checkable certificate; the harness
//! provides exact oracles and reporting used to verify all of it.

pub mod adversary;
pub mod bigraph;
pub mod bits;
pub mod blocks;
pub mod condensation;
pub mod drc;
pub mod error;
pub mod harness;
pub mod hypercube;
pub mod rng;
pub mod stats;
pub mod trichotomy;

pub use bigraph::{BipartiteGraph, Side, VertexSet};
pub use error::{Error, Result};
