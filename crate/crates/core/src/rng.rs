//! Named, counter-based random streams.
//!
//! Every random decision in the pipeline is drawn from a ChaCha stream keyed
//! by a user seed and a stage name, so stages never share state and a worker
//! can jump to its own substream without coordination.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::store::checksum::fnv1a64;

/// Derives a stage seed by hashing the stage name and mixing in `seed`.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + stage.len());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(stage.as_bytes());
    fnv1a64(&bytes)
}

/// Returns the generator for `(seed, stage)` positioned at substream `stream`.
pub fn substream(seed: u64, stage: &str, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(seed, stage));
    rng.set_stream(stream);
    rng
}
