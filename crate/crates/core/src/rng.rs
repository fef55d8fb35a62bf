//! Seeded random streams.
//!
//! Every consumer derives its generator from a user seed plus a stream name.
//! The name is hashed with 64-bit FNV-1a and used as the ChaCha stream id, so
//! two streams with different names never share a keystream and results do
//! not depend on the order in which streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_id(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn stream(seed: u64, name: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

/// A child seed for the `index`-th task of family `name`.
pub fn derive_seed(seed: u64, name: &str, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, &format!("{name}/{index}")).next_u64()
}
