//! Portable pseudo-random numbers for sampling and weight initialization.
//!
//! Seeds must reproduce across platforms and releases, so the generator is
//! pinned to xorshift64* with a splitmix64-scrambled seed instead of any
//! runtime default.

/// xorshift64* generator. Cheap, decent quality, and trivially portable.
#[derive(Debug, Clone)]
pub struct XorShift64 {
    state: u64,
}

const SEED_SCRAMBLE: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(SEED_SCRAMBLE);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl XorShift64 {
    /// Builds a generator from any seed, including zero.
    ///
    /// The raw seed is passed through splitmix64 so that small consecutive
    /// seeds do not produce correlated streams; a zero state (which would
    /// trap xorshift forever) falls back to the scramble constant.
    pub fn new(seed: u64) -> Self {
        let state = splitmix64(seed);
        XorShift64 {
            state: if state == 0 { SEED_SCRAMBLE } else { state },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform draw in `[0, bound)`. `bound` must be nonzero.
    pub fn gen_range(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn gen_f64_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
