//! Counter-based pseudorandom function used for every random draw.
//!
//! A draw is a pure function of `(seed, stream, words...)`: the seed is
//! passed through the SplitMix64 finalizer, then each word is folded in as
//! `h = mix64(h ^ (w * M_k))` where `M_k` is an odd multiplier that depends
//! on the word's position. The resulting 64-bit value is the draw. Draws do
//! not depend on query order or thread schedule, which makes the payoff
//! field stationary and reproducible. The function is frozen: changing it
//! changes every experiment output.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

const POSITION_MULTIPLIERS: [u64; 8] = [
    0xd1b5_4a32_d192_ed03,
    0xaef1_7502_108e_f2d9,
    0x8cb9_2ba7_2f3d_8dd7,
    0xf135_7aea_2e62_a9c5,
    0xc2b2_ae3d_27d4_eb4f,
    0x94d0_49bb_1331_11eb,
    0xbf58_476d_1ce4_e5b9,
    0xff51_afd7_ed55_8ccd,
];

/// Stream tags separating independent families of draws.
pub mod stream {
    pub const IID_STATE: u64 = 1;
    pub const ONE_SQUARE: u64 = 2;
    pub const ZERO_SQUARE: u64 = 3;
    pub const RUN_SEED: u64 = 4;
}

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Incremental hasher: fold words one at a time so callers scanning a grid
/// can reuse the prefix for the outer coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Prf {
    state: u64,
    position: usize,
}

impl Prf {
    #[inline]
    pub fn new(seed: u64, stream: u64) -> Self {
        Prf {
            state: mix64(seed.wrapping_add(GAMMA)),
            position: 0,
        }
        .push(stream)
    }

    #[inline]
    #[must_use]
    pub fn push(self, word: u64) -> Self {
        let m = POSITION_MULTIPLIERS[self.position % POSITION_MULTIPLIERS.len()];
        Prf {
            state: mix64(self.state ^ word.wrapping_mul(m)),
            position: self.position + 1,
        }
    }

    #[inline]
    #[must_use]
    pub fn push_i64(self, word: i64) -> Self {
        self.push(word as u64)
    }

    #[inline]
    pub fn finish(self) -> u64 {
        self.state
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of resolution.
#[inline]
pub fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Bernoulli draw with success probability `2^-bits`: success iff the top
/// `bits` bits are all zero. Exact for `bits <= 64`.
#[inline]
pub fn dyadic_bernoulli(h: u64, bits: u32) -> bool {
    match bits {
        0 => true,
        64.. => h == 0,
        b => h >> (64 - b) == 0,
    }
}

/// Bernoulli draw with success probability `p`.
#[inline]
pub fn bernoulli(h: u64, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else {
        unit_interval(h) < p
    }
}

/// Seed of the `index`-th run derived from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    Prf::new(base, stream::RUN_SEED).push(index).finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_function_of_inputs() {
        let a = Prf::new(7, stream::IID_STATE).push_i64(-3).push_i64(5).finish();
        let b = Prf::new(7, stream::IID_STATE).push_i64(-3).push_i64(5).finish();
        assert_eq!(a, b);
        let c = Prf::new(7, stream::IID_STATE).push_i64(5).push_i64(-3).finish();
        assert_ne!(a, c);
        let d = Prf::new(7, stream::ONE_SQUARE).push_i64(-3).push_i64(5).finish();
        assert_ne!(a, d);
    }

    #[test]
    fn dyadic_edges() {
        assert!(dyadic_bernoulli(u64::MAX, 0));
        assert!(dyadic_bernoulli(0, 64));
        assert!(!dyadic_bernoulli(1, 64));
        assert!(dyadic_bernoulli(u64::MAX >> 3, 3));
        assert!(!dyadic_bernoulli(1 << 61, 3));
    }

    #[test]
    fn uniform_mean_and_bit_balance() {
        let n = 200_000u64;
        let mut sum = 0.0;
        let mut ones = [0u32; 64];
        for k in 0..n {
            let h = Prf::new(11, stream::IID_STATE).push(k).finish();
            sum += unit_interval(h);
            for (b, c) in ones.iter_mut().enumerate() {
                *c += ((h >> b) & 1) as u32;
            }
        }
        let mean = sum / n as f64;
        // sd of the mean is sqrt(1/12 / n) ~ 6.5e-4
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / n as f64).sqrt(), "{mean}");
        let sd = (n as f64 * 0.25).sqrt();
        for (b, &c) in ones.iter().enumerate() {
            assert!((c as f64 - n as f64 / 2.0).abs() < 5.0 * sd, "bit {b}: {c}");
        }
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: std::collections::HashSet<_> = (0..10_000).map(|k| derive_seed(1, k)).collect();
        assert_eq!(seeds.len(), 10_000);
    }
}
