//! Deterministic seed derivation so that parallel and serial schedules draw
//! from identical streams.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `root`.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    mix(mix(root) ^ mix(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}
