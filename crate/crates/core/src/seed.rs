//! Deterministic derivation of per-stage seeds from one master seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a named stage. Distinct labels give unrelated streams.
pub fn derive(master: u64, label: &str) -> u64 {
    let mut h = master;
    for b in label.bytes() {
        h = mix(h ^ u64::from(b)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    }
    mix(h)
}
