//! Seed derivation tree.
//!
//! A master seed yields one seed per experiment (keyed by a label), and each
//! experiment seed yields one seed per trajectory or sample block (keyed by an
//! index). Any leaf can be regenerated without running its siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default master seed used by `reproduce-all`.
pub const DEFAULT_MASTER_SEED: u64 = 20_260_311;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for a named experiment under `master`.
pub fn experiment_seed(master: u64, label: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(label)))
}

/// Seed for the `index`-th job of an experiment.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
