//! Deterministic random streams for experiment instances.
//!
//! The generator is SplitMix64, chosen because its full state is a single
//! 64-bit counter and the algorithm is short enough to restate in any
//! language: starting from the seed, each draw adds the increment
//! `0x9E3779B97F4A7C15` to the state and returns
//!
//! ```text
//! z  = state
//! z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//! z ^= z >> 27;  z *= 0x94D049BB133111EB
//! z ^= z >> 31
//! ```
//!
//! all arithmetic mod 2^64. Reals in [0,1) take the top 53 bits. A report
//! produced from a given seed is therefore reproducible from this
//! description alone.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const INCREMENT: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(INCREMENT);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the half-open range `[lo, hi)` of integers, `lo < hi`.
    pub fn next_range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo < hi);
        lo + self.next_u64() % (hi - lo)
    }

    /// Uniform on the closed complex unit disc via the polar map
    /// r = sqrt(u), theta = 2*pi*v; two draws per point, u first.
    pub fn next_unit_disc(&mut self) -> Complex64 {
        let u = self.next_f64();
        let v = self.next_f64();
        let r = u.sqrt();
        let theta = std::f64::consts::TAU * v;
        Complex64::new(r * theta.cos(), r * theta.sin())
    }

    /// Uniform on the unit circle; one draw.
    pub fn next_unimodular(&mut self) -> Complex64 {
        let theta = std::f64::consts::TAU * self.next_f64();
        Complex64::new(theta.cos(), theta.sin())
    }
}

/// A pure, stateless draw used by rule-defined random multiplicative
/// functions: the stream is keyed by (seed, p, k) so that evaluation order
/// cannot affect values.
pub fn keyed_unit_disc(seed: u64, p: u64, k: u32) -> Complex64 {
    let key = seed
        ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut rng = SplitMix64::new(key);
    rng.next_unit_disc()
}
