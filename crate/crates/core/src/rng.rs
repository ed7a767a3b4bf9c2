//! Seeded random streams.
//!
//! A single integer seed fans out into independent ChaCha streams, one per
//! source of randomness, so that (for example) changing the dropout pattern
//! never perturbs tie-breaking or parameter initialisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Dropout = 2,
    Ties = 3,
    Split = 4,
    Features = 5,
    Generator = 6,
    Shuffle = 7,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Maps a 64-bit draw onto `0..len` with a single multiply (no rejection
/// loop), so each call consumes exactly one word from the stream.
#[inline]
pub(crate) fn index_from_word(word: u64, len: usize) -> usize {
    debug_assert!(len > 0);
    ((word as u128 * len as u128) >> 64) as usize
}
