//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! user seed. The 64-bit stream number packs a purpose tag into the top 16
//! bits and an index (replicate, permutation, point) into the low 48 bits, so
//! point placement, mark draws and each permutation replay independently of
//! one another and of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags for [`substream`].
pub mod tag {
    pub const PLACEMENT: u16 = 0x0001;
    pub const MARKS_UNIFORM: u16 = 0x0002;
    pub const MARKS_NEIGHBOR: u16 = 0x0003;
    pub const PERMUTATION: u16 = 0x0004;
    pub const NETWORK: u16 = 0x0005;
}

const INDEX_MASK: u64 = (1 << 48) - 1;

pub fn substream(seed: u64, tag: u16, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) | (index & INDEX_MASK));
    rng
}
