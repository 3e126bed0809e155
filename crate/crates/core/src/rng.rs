//! Counter-based randomness for reproducible, order-independent draws.
//!
//! Edge indicators and per-cell experiment seeds are derived with the
//! SplitMix64 finalizer keyed on `(seed, i, j)`. Each draw depends only
//! on its key, never on draw order, so matrix rows can be generated in
//! any order (or in parallel) with bit-identical results.

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream index.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ stream.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))
}

/// Uniform draw in `[0, 1)` keyed on an unordered edge `(i, j)` of a given
/// sample seed. Symmetric in `i` and `j` by construction.
#[inline]
pub fn edge_uniform(seed: u64, i: usize, j: usize) -> f64 {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    let h = splitmix64(derive_seed(seed, a as u64) ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    // 53 high bits -> [0, 1)
    (h >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}
