//! Seed substreams.
//!
//! Every random component draws from its own generator, seeded from a parent
//! seed and a path of integer tags. Two components never share a stream, so
//! results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used across the crate.
pub mod tag {
    pub const ASSIGNMENT: u64 = 1;
    pub const GROUND: u64 = 2;
    pub const PREDICTION: u64 = 3;
    pub const APPROVAL: u64 = 4;
    pub const BOARD_ORDER: u64 = 5;
    pub const SUB_LOTTERY: u64 = 6;
    pub const BAG_DRAW: u64 = 7;
    pub const MECHANISM: u64 = 8;
    pub const DEVIATION: u64 = 9;
    pub const TRIAL: u64 = 10;
    pub const CLUSTERS: u64 = 11;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a tag path.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

pub fn rng(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(parent: u64, path: &[u64]) -> StreamRng {
    rng(derive(parent, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_are_order_sensitive() {
        assert_ne!(derive(1, &[2, 3]), derive(1, &[3, 2]));
        assert_ne!(derive(1, &[2]), derive(1, &[2, 0]));
        assert_eq!(derive(9, &[4, 5]), derive(9, &[4, 5]));
    }
}
