//! Seeded, reproducible pseudo-random streams.
//!
//! Every stochastic decision in the crate draws from [`Mt64`], a 64-bit
//! Mersenne Twister (MT19937-64). The derived draws are fixed so that other
//! runtimes can reproduce a stream exactly:
//!
//! - [`Mt64::uniform`]: `(next_u64 >> 11) * 2^-53`, in `[0, 1)`.
//! - [`Mt64::gaussian`]: Box-Muller cosine branch on two uniforms
//!   `u1 = 1 - uniform()`, `u2 = uniform()`; no value is cached.
//! - [`Mt64::below`]: rejection sampling on raw 64-bit outputs, no modulo bias.
//! - [`Mt64::shuffle`]: Fisher-Yates from the last index down, using `below`.

const NN: usize = 312;
const MM: usize = 156;
const MATRIX_A: u64 = 0xB502_6F5A_A966_19E9;
const UPPER_MASK: u64 = 0xFFFF_FFFF_8000_0000;
const LOWER_MASK: u64 = 0x7FFF_FFFF;

/// MT19937-64 generator.
#[derive(Clone)]
pub struct Mt64 {
    state: Box<[u64; NN]>,
    index: usize,
}

impl std::fmt::Debug for Mt64 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mt64").field("index", &self.index).finish_non_exhaustive()
    }
}

impl Mt64 {
    pub fn new(seed: u64) -> Self {
        let mut state = Box::new([0u64; NN]);
        state[0] = seed;
        for i in 1..NN {
            let prev = state[i - 1];
            state[i] = 6_364_136_223_846_793_005u64
                .wrapping_mul(prev ^ (prev >> 62))
                .wrapping_add(i as u64);
        }
        Mt64 { state, index: NN }
    }

    fn twist(&mut self) {
        let mag = |x: u64| if x & 1 == 0 { 0 } else { MATRIX_A };
        let mt = &mut self.state;
        for i in 0..NN - MM {
            let x = (mt[i] & UPPER_MASK) | (mt[i + 1] & LOWER_MASK);
            mt[i] = mt[i + MM] ^ (x >> 1) ^ mag(x);
        }
        for i in NN - MM..NN - 1 {
            let x = (mt[i] & UPPER_MASK) | (mt[i + 1] & LOWER_MASK);
            mt[i] = mt[i + MM - NN] ^ (x >> 1) ^ mag(x);
        }
        let x = (mt[NN - 1] & UPPER_MASK) | (mt[0] & LOWER_MASK);
        mt[NN - 1] = mt[MM - 1] ^ (x >> 1) ^ mag(x);
        self.index = 0;
    }

    pub fn next_u64(&mut self) -> u64 {
        if self.index >= NN {
            self.twist();
        }
        let mut x = self.state[self.index];
        self.index += 1;
        x ^= (x >> 29) & 0x5555_5555_5555_5555;
        x ^= (x << 17) & 0x71D6_7FFF_EDA6_0000;
        x ^= (x << 37) & 0xFFF7_EEE0_0000_0000;
        x ^= x >> 43;
        x
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lower: f64, upper: f64) -> f64 {
        lower + (upper - lower) * self.uniform()
    }

    /// Standard normal deviate.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // 2^64 mod n values at the top of the range are rejected.
        let rem = (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if rem == 0 || x < 0u64.wrapping_sub(rem) {
                return x % n;
            }
        }
    }

    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below_usize(i + 1);
            items.swap(i, j);
        }
    }

    pub fn bytes16(&mut self) -> [u8; 16] {
        let mut out = [0u8; 16];
        out[..8].copy_from_slice(&self.next_u64().to_le_bytes());
        out[8..].copy_from_slice(&self.next_u64().to_le_bytes());
        out
    }
}

/// SplitMix64 finalizer, used to derive independent child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &k| mix64(acc ^ mix64(k)))
}
