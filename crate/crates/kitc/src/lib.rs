//! Kernel-independent treecode for fast summation of particle interactions.
//!
//! Evaluates pairwise sums `u(x_i) = Σ_j k(x_i, x_j) f_j` in O(N log N) by
//! replacing well-separated particle-cluster interactions with barycentric
//! Lagrange interpolation of the kernel at Chebyshev points of the 2nd kind.
//! The method needs only black-box kernel evaluations, so it applies to any
//! smooth non-oscillatory kernel; regularized Stokeslet and rotlet kernels
//! for slow viscous flow are built in, along with a scalar Coulomb kernel.
//!
//! The crate also ships a benchmark harness (`harness`) and CLI (`cli`) that
//! generate the two reference particle configurations (randomly placed
//! force dipoles in a cube, and an array of helical rods), run the treecode
//! against direct summation, and report error, timings, and operation counts.

pub mod chebyshev;
pub mod cli;
pub mod engine;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod moments;
pub mod tree;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
