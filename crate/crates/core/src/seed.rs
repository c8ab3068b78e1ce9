//! Seed fan-out.
//!
//! Every random stream in a run is derived from one master seed and a
//! stable label, e.g. `derive(7, "svm/fold-3")`. The label is hashed with
//! 64-bit FNV-1a, xored into the master seed and finalized with the
//! splitmix64 mixer, so sub-seeds are independent of call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the sub-seed for `label` from `master`.
pub fn derive(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a(label))
}

/// A ChaCha8 generator seeded from `derive(master, label)`.
pub fn rng(master: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, label))
}
