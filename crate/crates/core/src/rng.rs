//! Seeded randomness shared by every simulation in the crate.

use rand::{Rng, SeedableRng};

/// The generator used for all rollouts and agent runs.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Name recorded next to experiment outputs.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Derives an independent stream for a sub-task of a seeded job.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform sample in `[0, 1)`.
#[inline]
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Inverse-CDF draw from `probs`, scanning indices in ascending order.
///
/// Zero-probability entries are never returned. A sample landing exactly on
/// a cumulative boundary resolves to the lower index.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = i;
        if u <= cumulative {
            return i;
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_goes_to_lower_index() {
        assert_eq!(sample_index(&[0.5, 0.5], 0.5), 0);
        assert_eq!(sample_index(&[0.5, 0.5], 0.5000001), 1);
    }

    #[test]
    fn zero_mass_entries_are_skipped() {
        assert_eq!(sample_index(&[0.0, 1.0], 0.0), 1);
        assert_eq!(sample_index(&[0.3, 0.0, 0.7], 0.3), 0);
        assert_eq!(sample_index(&[0.3, 0.0, 0.7], 0.31), 2);
    }

    #[test]
    fn round_off_falls_back_to_last_positive() {
        assert_eq!(sample_index(&[0.2, 0.3, 0.5 - 1e-12, 0.0], 1.0 - 1e-13), 2);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
