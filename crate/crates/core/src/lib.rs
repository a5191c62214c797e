//! Monte Carlo toolkit for Brownian interlacements in R^d (d = 3..8):
//! finite-window sampling of the interlacement point process, capacity and
//! hitting-probability estimation, sausage-intersection graphs, vacant-set
//! crossing experiments, and the dyadic renormalization-tree combinatorics.
//!
//! The numeric kernels are generic over the scalar type via [`Scalar`]
//! (f32 or f64); the aliases at the crate root pin f64, which is what the
//! CLI uses. Renormalization combinatorics use exact integer arithmetic.

pub mod brownian;
pub mod cactus;
pub mod interlacement;
pub mod percolation;
pub mod renorm;
pub mod sausage_graph;
pub mod capacity;
pub mod config;
pub mod error;
pub mod geom;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod spatial;
pub mod stats;
pub mod voxel;

pub use error::{Error, Result};
pub use rng::RngSpec;
pub use scalar::Scalar;

/// Concrete f64 aliases used throughout the CLI.
pub type Point = geom::PointT<f64>;
pub type Region = geom::BoxRegion<f64>;
pub type Params = geom::ModelParams<f64>;
pub type Traj = brownian::Trajectory<f64>;
pub type Sim = sim::SimParams<f64>;
pub type CapEstimate = capacity::CapacityEstimate<f64>;
pub type Voxels = voxel::VoxelSet<f64>;
