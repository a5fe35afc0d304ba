//! Hierarchy-supervised hyperbolic grouping.
//!
//! The crate covers the algorithmic side of the pipeline and runs without
//! `std` (an allocator is required):
//!
//! * [`lorentz`]: Lorentz-model geometry on the curvature-`c` hyperboloid.
//! * [`hierarchy`]: descriptor pooling, affinity graphs, containment parenting,
//!   leaf partitions, Dasgupta cost and tree builders.
//! * [`trainer`]: the four hierarchy losses, the max-norm regularizer, their
//!   analytic gradients and an Adam training loop.
//! * [`eval`]: tangent-space query affinity, completeness sweeps, candidate
//!   generation and budgeted group recall.
//! * [`scene`]: seeded synthetic scenes with known ground-truth hierarchies.
//!
//! File formats, timing and the command line live in the `hyptree` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod eval;
pub mod grid;
pub mod hierarchy;
pub mod linalg;
pub mod lorentz;
pub(crate) mod math;
pub mod pca;
pub mod scene;
pub mod trainer;

pub use error::{Error, Result};
pub use grid::{Grid, Mask};
pub use lorentz::{Curvature, KleinPoint, LorentzPoint, TangentVector};
