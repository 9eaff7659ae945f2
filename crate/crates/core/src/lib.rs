//! Longest increasing paths of a unit-intensity planar Poisson process,
//! unrestricted or confined to strips and diagonal rectangles.
//!
//! The crate has exact chain algorithms ([`chains`]), the maximizer-family
//! machinery behind the regeneration event ([`regeneration`]), and Monte Carlo
//! drivers with their statistics ([`experiments`]). The `lipstrip` binary
//! wraps the drivers ([`cli`]).

pub mod chains;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod regeneration;
pub mod sampling;

pub use chains::{build_skeleton, delta_spread, longest_chain, transversal_s, ChainQuery, ChainResult, Skeleton};
pub use error::{Error, Result};
pub use geometry::{dominates, ts_to_xy, xy_to_ts, DiagRect, PointTS, PointXY, Region};
pub use regeneration::{omega_occurs, OmegaReport};
pub use sampling::{poisson_count, sample_region, PointSet, SeedSpec};
