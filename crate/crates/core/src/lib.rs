//! Closeness testing of multidimensional distributions under the `A_k` distance.
//!
//! The `A_k` distance between two distributions `p`, `q` on `R^d` is the largest
//! value of `sum_i |p(R_i) - q(R_i)|` over families of `k` non-overlapping
//! axis-aligned rectangles. This crate implements a sample-based tester for
//! `p = q` versus `||p - q||_{A_k} >= eps`, along with the pieces it is built from
//! and a set of exact oracles and hard-instance generators used to check them:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`geometry`] | boxes, point-pair boxes, complement carving, dominating triples |
//! | [`distributions`] | sparse grid measures, Poissonized sampling, rank transform |
//! | [`covering`] | sample-point grid, dyadic grid covering, induced outcomes |
//! | [`flatten_l2`] | split distributions, the Poissonized `l2` statistic and testers |
//! | [`tester`] | the end-to-end `A_k` tester and its two reductions |
//! | [`oracle`] | exact `A_k` distance and random-pair discrepancy on small inputs |
//! | [`hardness`] | square-edge gadgets, order tuples, hard instances, monotone maps |
//! | [`families`] | box histograms and planted instance pairs |
//! | [`spec_file`] | JSON distribution-spec files |
//! | [`experiment`] | seeded, parallel trial harness with CSV output |
//!
//! All randomness flows through caller-provided generators; every operation is
//! deterministic given its seed.

use thiserror::Error;

pub mod covering;
pub mod distributions;
pub mod experiment;
pub mod families;
pub mod flatten_l2;
pub mod geometry;
pub mod hardness;
pub mod oracle;
pub mod spec_file;
pub mod tester;
pub mod verify;

pub use covering::{CoverFamily, FamilyKey, InducedOutcome, SamplePointGrid};
pub use distributions::{DiscreteGridDistribution, LabeledSample, RankedSampleSet, Source};
pub use geometry::{AxisRectangle, PointSet};
pub use tester::{Decision, Mode, TestVerdict, TesterConfig, TesterConstants};

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point set is not generic: axis {axis} repeats coordinate {value}")]
    NotGeneric { axis: usize, value: f64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("sample access produced no samples: {0}")]
    DegenerateAccess(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Generator used throughout the crate.
pub type TestRng = rand_chacha::ChaCha8Rng;

/// Deterministic generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> TestRng {
    use rand::SeedableRng;
    TestRng::seed_from_u64(seed)
}

/// Splittable seed derivation: the seed for item `index` of a run with
/// `master` seed. Two rounds of SplitMix64 finalization over the pair.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD134_2543_DE82_EF95))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
