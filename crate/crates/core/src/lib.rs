//! Weighted matrix frames: radial isotropic position via a log-determinant
//! objective, orbit-polytope feasibility, quiver predicates, and rounding of
//! nearly equal-norm Parseval frames to exact ones.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod frame;
pub mod generate;
pub mod linalg;
pub mod objective;
pub mod paulsen;
pub mod polytope;
pub mod quiver;
pub mod solver;
pub mod weights;

pub use error::{FrameError, Result};
pub use frame::{dist_squared, MatrixFrame, DEFAULT_TOL};
pub use paulsen::{paulsen_round, PaulsenConfig, PaulsenReport};
pub use polytope::{check_sigma0_stability, in_orbit_polytope, in_relative_interior, PolytopeReport};
pub use solver::{minimize, transform_to_rif, SolveResult, SolveStatus, SolverConfig};
pub use weights::{FrameDatum, StabilityWeight, WeightVector};
