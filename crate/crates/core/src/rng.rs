//! Deterministic random streams.
//!
//! Every simulated acquisition draws from its own ChaCha stream, selected
//! by a stream index derived from its position in the run. Results are
//! therefore independent of evaluation order and of how the work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator behind all simulations.
pub type SimRng = ChaCha8Rng;

/// Generator for `stream` under the run seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream index of acquisition `slot` inside measurement `window`.
pub fn window_stream(window: u64, slot: u64) -> u64 {
    (window << 8) | (slot & 0xff)
}
