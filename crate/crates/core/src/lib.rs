//! Estimation of sparse discrete distributions from users who may each
//! send only a locally private or an ℓ-bit message.
//!
//! * [`hr`]: one-bit Hadamard Response decoded with dense or sparse
//!   simplex projection.
//! * [`rappor`]: RAPPOR with two-stage support selection.
//! * [`comm`]: public-coin hashing scheme for ℓ-bit messages.
//! * [`bounds`]: LDP channel checks, χ² contraction over the packing
//!   family, packing gaps and sample-size planning.
//! * [`harness`]: seeded, resumable experiment grids.

pub mod bounds;
pub mod comm;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod hadamard;
pub mod harness;
pub mod hr;
pub mod projection;
pub mod rappor;
pub mod rng;

pub use dist::{tv_distance, Distribution};
pub use error::{Error, Result};
pub use rng::RandomStream;
