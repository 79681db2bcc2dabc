//! Seeding: every replication gets its own ChaCha stream under a master seed,
//! so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
