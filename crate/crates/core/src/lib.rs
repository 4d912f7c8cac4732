//! Simulation and verification toolkit for critical random intersection graphs.
//!
//! The bipartite parent `B(n, m, p)` has `n` individuals (the V side) and `m`
//! communities (the U side); the intersection graph `G(n, m, p)` joins two
//! individuals when they share a community. The crate samples both, runs the
//! depth-first exploration of `B(n, m, p)` that produces the walk `(R, S)` and
//! its height process `H`, classifies surplus edges, counts triangles, simulates
//! the Brownian limit objects and checks the predicted scaling limits by Monte
//! Carlo.
//!
//! Labels are 0-based throughout: V-vertices are `0..n`, U-vertices `0..m`.
//! Step indices of the exploration are 1-based (`k = 1..=n`) so that walk
//! sequences can be indexed as `s[k]` with `s[0] = 0`.

pub mod campaigns;
pub mod continuum;
mod error;
pub mod exploration;
pub mod regimes;
pub mod rng;
pub mod sampler;
pub mod surplus_triangles;
pub mod validation;

pub use error::{Error, Result};
pub use exploration::{explore, explore_until, ExplorationTrace, RootRule};
pub use regimes::{build_config, scaling_set, Regime, RegimeConfig, ScalingSet, Shape};
pub use sampler::{induce_intersection, sample_bipartite, BipartiteGraph, IntersectionGraph, Vertex};
