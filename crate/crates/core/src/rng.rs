//! Counter-based randomness.
//!
//! Every random quantity in an instance is a pure function of
//! `(seed, stream, counter)`, so draws do not depend on evaluation order or
//! thread count. The mixer is SplitMix64's finalizer.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `(seed, stream, counter)` into 64 uniform bits.
#[inline]
pub fn hash3(seed: u64, stream: u64, counter: u64) -> u64 {
    let a = mix64(seed.wrapping_add(GOLDEN));
    let b = mix64(a ^ stream.wrapping_mul(GOLDEN).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(b ^ counter.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(GOLDEN))
}

/// Uniform in the open interval (0, 1) with 53 bits of resolution.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    // The top value rounds up to 1.0 without the clamp.
    (((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)).min(1.0 - f64::EPSILON / 2.0)
}

/// Per-trial seed: `mix64(base ^ mix64(trial + 1))`.
///
/// This is the splitting rule for every sweep; trial seeds are independent
/// of dispatch order.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    mix64(base_seed ^ mix64(trial_index.wrapping_add(1)))
}

/// Standard normal from two counter draws (Box–Muller, cosine branch).
#[inline]
pub fn standard_normal(seed: u64, stream: u64, counter: u64) -> f64 {
    let u1 = unit_open(hash3(seed, stream, 2 * counter));
    let u2 = unit_open(hash3(seed, stream, 2 * counter + 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
