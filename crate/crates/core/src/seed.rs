//! Reproducible seeding.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`], whose output
//! stream is fixed across platforms. Independent sub-streams (one per Monte
//! Carlo replicate, per trial, per retry) are derived from a master seed with
//! [`derive_seed`], so parallel and serial runs consume identical streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Named sub-stream tags. Keeping them distinct guarantees that, e.g., the
/// density realizations never coincide with the evaluation graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Density = 1,
    Trial = 2,
    InitialState = 3,
    Baseline = 4,
    SingleRealization = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of sub-stream `(stream, index, attempt)` from `master`.
pub fn derive_seed(master: u64, stream: Stream, index: u64, attempt: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ stream as u64);
    h = splitmix64(h ^ index);
    splitmix64(h ^ attempt)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derived_seeds_differ_by_stream_and_index() {
        let a = derive_seed(7, Stream::Density, 0, 0);
        assert_ne!(a, derive_seed(7, Stream::Trial, 0, 0));
        assert_ne!(a, derive_seed(7, Stream::Density, 1, 0));
        assert_ne!(a, derive_seed(7, Stream::Density, 0, 1));
        assert_eq!(a, derive_seed(7, Stream::Density, 0, 0));
    }

    #[test]
    fn generator_stream_is_pinned() {
        // ChaCha8 output is specified; a change here means results files
        // from earlier runs no longer reproduce.
        let mut rng = rng_from_seed(42);
        let first: u64 = rng.random();
        let mut again = rng_from_seed(42);
        assert_eq!(first, again.random::<u64>());
    }
}
