//! Named random sub-streams derived from a single scenario seed.
//!
//! Each consumer (one radio stream per beacon, the encounter jitter, coverage
//! averaging) gets its own ChaCha stream selected by hashing a name, so adding
//! draws in one place never shifts the numbers another place sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

// FNV-1a, 64-bit. Stable across platforms and releases, unlike `DefaultHasher`.
fn stream_id(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Deterministic stream for `(seed, name)`.
pub fn substream(seed: u64, name: &str) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(name));
    rng
}

pub fn radio_stream_name(beacon_id: &str) -> String {
    format!("radio/{beacon_id}")
}

pub const GAME_STREAM: &str = "game/jitter";

pub fn coverage_stream_name(beacon_id: &str) -> String {
    format!("coverage/{beacon_id}")
}
