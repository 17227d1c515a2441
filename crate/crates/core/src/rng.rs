//! Seed/stream addressing for reproducible parallel sampling.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator
//! fixed by a `(seed, stream)` pair, so results never depend on which
//! thread ran which task or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for one `(seed, stream)` address.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministically derive an independent seed for a labelled sub-task
/// (e.g. one point of a lambda grid).
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ label.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream id for retry `attempt` of replicate `replicate`.
pub fn retry_stream(replicate: u64, attempt: u64) -> u64 {
    replicate | (attempt << 48)
}
