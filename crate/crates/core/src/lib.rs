//! Hausdorff dimension of limit sets of sequences of Lalley-Gatzouras
//! self-affine schemes.
//!
//! * [`scheme`]: scheme types, validation, composition.
//! * [`variational`]: the dimension functional, its maximizer and oracles,
//!   and `L(Q)` for frequency vectors.
//! * [`sequences`]: driving sequences and appearance statistics.
//! * [`coupling`]: rectangles, approximate squares, the index matching
//!   between two sequences and the induced bijection of address spaces.
//! * [`measures`]: Bernoulli-type measures on address space and local
//!   dimension checks.
//! * [`attractor`]: point clouds, box counting, PGM rendering.
//! * [`cli`]: the `lgdim` command-line surface.

pub mod error;
pub mod scheme;
pub mod variational;
pub mod sequences;
pub mod coupling;
pub mod measures;
pub mod attractor;
pub mod cli;

pub use error::{Error, Result};
