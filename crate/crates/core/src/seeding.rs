//! Seed derivation. Every random stream in a run is keyed by
//! `(master seed, role, index)` so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a role tag and an index.
pub fn derive_seed(master: u64, role: &str, index: u64) -> u64 {
    let mut h = splitmix64(master);
    for b in role.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

pub fn rng_for(master: u64, role: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(master, role, index))
}
