//! Seeded, portable random streams.
//!
//! Every generator is a ChaCha8 stream keyed by the user seed; independent
//! consumers select distinct stream ids so adding draws in one place never
//! perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const POSE_STREAM: u64 = 1;
pub const MATCH_STREAM: u64 = 2;
pub const DETECTION_STREAM: u64 = 3;
pub const HOMOGRAPHY_STREAM: u64 = 4;
pub const FRAME_SAMPLE_STREAM: u64 = 5;
pub const COLOR_STREAM: u64 = 6;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
