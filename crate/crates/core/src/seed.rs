//! Counter-mode random streams: every run owns a ChaCha stream selected by its
//! index, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `master`.
pub fn stream_rng(master: u64, stream: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Stream addressed by a (major, minor) pair such as (generation, run).
pub fn pair_rng(master: u64, major: u64, minor: u32) -> RunRng {
    stream_rng(master, (major << 32) | minor as u64)
}
