//! Seed derivation and normal sampling used across the crate. Everything is
//! deterministic given the inputs; no thread-local RNG anywhere.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Derive a child seed from a base seed and a stream index (splitmix64
/// finalizer). Distinct streams give statistically independent generators.
pub(crate) fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One standard-normal draw via Box-Muller (two uniforms per call).
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // random::<f64>() is in [0, 1); flip so the log argument is in (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
