//! Named random substreams derived from one root seed.
//!
//! Every consumer of randomness asks for a stream by label plus integer
//! coordinates, so two methods run on the same root seed see identical inputs
//! regardless of the order in which streams are requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit key for `(root, label, coords)`.
pub fn substream_key(root: u64, label: &str, coords: &[u64]) -> u64 {
    // FNV-1a over the label keeps keys stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    let mut key = splitmix64(root ^ h);
    for &c in coords {
        key = splitmix64(key ^ c);
    }
    key
}

pub fn substream(root: u64, label: &str, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_key(root, label, coords))
}
