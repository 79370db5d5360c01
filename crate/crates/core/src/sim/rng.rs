//! Per-replica random streams.
//!
//! The stream of replica `i` depends only on `(master_seed, i)`, never on the
//! schedule, so results are identical for any number of workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicaRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step.
#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 128-bit seed of replica `replica` under `master`. Injective in `replica`
/// for a fixed master.
pub fn replica_seed(master: u64, replica: u64) -> u128 {
    let mut s = master;
    let key = splitmix64(&mut s);
    let mut t = key ^ replica.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let hi = splitmix64(&mut t);
    let lo = splitmix64(&mut t);
    (u128::from(hi) << 64) | u128::from(lo)
}

pub fn rng_from_seed(seed: u128) -> ReplicaRng {
    let mut key = [0u8; 32];
    key[..16].copy_from_slice(&seed.to_le_bytes());
    let mut s = (seed >> 64) as u64 ^ seed as u64;
    key[16..24].copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    key[24..].copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn replica_rng(master: u64, replica: u64) -> ReplicaRng {
    rng_from_seed(replica_seed(master, replica))
}
