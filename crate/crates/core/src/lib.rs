//! Space-filling designs on the probability simplex, crossed with
//! environmental factors, and an additive Gaussian process surrogate for
//! the resulting mixed continuous/categorical data.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agp;
pub mod assembly;
pub mod dataset;
pub mod error;
pub mod features;
pub mod harness;
pub mod io;
pub mod linear;
pub mod maxpro;
pub mod metrics;
pub mod optim;
pub mod simplex;
pub mod surrogate;

pub use error::{Error, Result};

/// The crate's single source of seeded randomness.
pub(crate) fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
