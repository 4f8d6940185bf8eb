use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::genome::BitChromosome;

/// Parameters of a concatenated deceptive trap.
///
/// Each block of `l` bits scores by its unitation `u`:
/// `a * (z - u) / z` when `u <= z`, otherwise `b * (u - z) / (l - z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrapParams {
    pub l: usize,
    pub a: f64,
    pub b: f64,
    pub z: usize,
    pub num_blocks: usize,
}

impl TrapParams {
    /// The 4-bit trap with `a = 1, b = 2, z = 3` over `num_blocks` blocks.
    pub fn classic(num_blocks: usize) -> Self {
        TrapParams { l: 4, a: 1.0, b: 2.0, z: 3, num_blocks }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.num_blocks == 0 {
            return invalid("trap needs l >= 1 and at least one block");
        }
        if self.z == 0 || self.z >= self.l {
            return invalid(format!("trap threshold z={} must satisfy 0 < z < l={}", self.z, self.l));
        }
        if !(self.a > 0.0 && self.b > self.a && self.b.is_finite()) {
            return invalid(format!("trap heights need 0 < a < b (got a={}, b={})", self.a, self.b));
        }
        Ok(())
    }

    pub fn length(&self) -> usize {
        self.l * self.num_blocks
    }

    /// Fitness of the all-ones string, the unique optimum.
    pub fn optimum(&self) -> f64 {
        self.b * self.num_blocks as f64
    }

    fn block_value(&self, unitation: usize) -> f64 {
        if unitation <= self.z {
            self.a * (self.z - unitation) as f64 / self.z as f64
        } else {
            self.b * (unitation - self.z) as f64 / (self.l - self.z) as f64
        }
    }
}

pub fn trap_fitness(chromosome: &BitChromosome, params: &TrapParams) -> Result<f64> {
    params.validate()?;
    if chromosome.len() != params.length() {
        return invalid(format!(
            "chromosome has {} bits, trap expects {} x {} = {}",
            chromosome.len(),
            params.num_blocks,
            params.l,
            params.length()
        ));
    }
    Ok(trap_fitness_unchecked(chromosome.bits(), params))
}

pub(crate) fn trap_fitness_unchecked(bits: &[u8], params: &TrapParams) -> f64 {
    bits.chunks_exact(params.l)
        .map(|block| {
            let u = block.iter().map(|&b| b as usize).sum();
            params.block_value(u)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chrom(bits: &[u8]) -> BitChromosome {
        BitChromosome::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn forty_trap_extremes() {
        let p = TrapParams::classic(40);
        assert_eq!(trap_fitness(&BitChromosome::ones(160), &p).unwrap(), 80.0);
        assert_eq!(trap_fitness(&BitChromosome::zeros(160), &p).unwrap(), 40.0);
    }

    #[test]
    fn block_at_threshold_scores_zero() {
        let p = TrapParams::classic(1);
        assert_eq!(trap_fitness(&chrom(&[1, 1, 1, 0]), &p).unwrap(), 0.0);
        assert_eq!(trap_fitness(&chrom(&[0, 1, 0, 0]), &p).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let p = TrapParams::classic(2);
        assert!(trap_fitness(&BitChromosome::ones(7), &p).is_err());
    }

    #[test]
    fn bad_params_rejected() {
        let mut p = TrapParams::classic(2);
        p.z = 4;
        assert!(p.validate().is_err());
        let mut p = TrapParams::classic(2);
        p.b = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn all_ones_is_unique_optimum_by_enumeration() {
        let p = TrapParams::classic(2);
        let best = trap_fitness(&BitChromosome::ones(8), &p).unwrap();
        for mask in 0u32..256 {
            let bits: Vec<u8> = (0..8).map(|i| ((mask >> i) & 1) as u8).collect();
            let f = trap_fitness(&chrom(&bits), &p).unwrap();
            if mask != 255 {
                assert!(f < best, "mask {mask:08b} scored {f}");
            }
        }
    }

    proptest! {
        #[test]
        fn invariant_under_block_and_bit_permutation(
            bits in prop::collection::vec(0u8..2, 40),
            seed in any::<u64>(),
        ) {
            let p = TrapParams::classic(10);
            let base = trap_fitness(&chrom(&bits), &p).unwrap();
            let mut rng = crate::rng::Mt64::new(seed);
            let mut blocks: Vec<Vec<u8>> = bits.chunks(4).map(|c| c.to_vec()).collect();
            rng.shuffle(&mut blocks);
            for b in blocks.iter_mut() {
                rng.shuffle(b);
            }
            let permuted: Vec<u8> = blocks.concat();
            prop_assert!((trap_fitness(&chrom(&permuted), &p).unwrap() - base).abs() < 1e-12);
        }
    }
}
