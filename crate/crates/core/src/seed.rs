//! Stable derivation of independent RNG lanes from one master seed.
//!
//! Every random stream in a run is identified by a lane name such as
//! `"walk"` or `"tdoa/FG-NTL"`. The sub-seed is a SplitMix64 finalisation of
//! the master seed xor-ed with the FNV-1a hash of the lane name, so the
//! mapping is fixed across platforms and compiler versions, and adding a new
//! lane never perturbs an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LaneRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn lane_seed(master: u64, lane: &str) -> u64 {
    splitmix64(master ^ fnv1a(lane.as_bytes()))
}

pub fn lane_rng(master: u64, lane: &str) -> LaneRng {
    ChaCha8Rng::seed_from_u64(lane_seed(master, lane))
}

/// Master seed of replicate `k`. Replicate 0 reuses the scenario seed so a
/// single-replicate batch reproduces a plain run.
pub fn replicate_seed(master: u64, k: usize) -> u64 {
    if k == 0 {
        master
    } else {
        lane_seed(master, &format!("replicate/{k}"))
    }
}
