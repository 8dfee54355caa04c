//! Seed derivation for reproducible, parallelizable sampling.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] whose seed is
//! derived from a master seed and a label path (for example relation name,
//! baseline kind, instance index), so results do not depend on evaluation
//! order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Mixes a label into a seed.
pub fn derive(seed: u64, label: &str) -> u64 {
    splitmix64(seed ^ fnv1a(label.as_bytes()))
}

/// Mixes an index into a seed.
pub fn derive_index(seed: u64, index: u64) -> u64 {
    splitmix64(seed.rotate_left(17) ^ splitmix64(index))
}

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
