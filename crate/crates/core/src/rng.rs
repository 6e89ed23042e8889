//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used by every seeded routine in the crate.
pub type EisRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> EisRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
///
/// Streams of one seed never overlap, so work items that each take their own
/// stream produce the same draws regardless of execution order.
pub fn derived(seed: u64, stream: u64) -> EisRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs an iteration index, a purpose tag and an item index into a stream id.
pub fn stream_id(iteration: usize, purpose: u8, item: usize) -> u64 {
    ((iteration as u64) << 40) | ((purpose as u64) << 32) | (item as u64 & 0xffff_ffff)
}
