//! Genome representations and their wire encoding.
//!
//! Bitstrings travel as a JSON string of `'0'`/`'1'` characters, real vectors
//! as a JSON array of numbers. `serde_json` writes the shortest decimal that
//! round-trips, so real genomes survive the wire bit-for-bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A string of bits, one `u8` (0 or 1) per position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitChromosome(Vec<u8>);

impl BitChromosome {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return invalid(format!("bit {pos} is {} (expected 0 or 1)", bits[pos]));
        }
        Ok(BitChromosome(bits))
    }

    pub fn ones(len: usize) -> Self {
        BitChromosome(vec![1; len])
    }

    pub fn zeros(len: usize) -> Self {
        BitChromosome(vec![0; len])
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BitChromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitChromosome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => invalid(format!("unexpected character {other:?} in bitstring")),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitChromosome)
    }
}

impl Serialize for BitChromosome {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitChromosome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point in a continuous search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Self {
        RealVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        RealVector(vec![0.0; len])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for RealVector {
    fn from(v: Vec<f64>) -> Self {
        RealVector(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Genome {
    Bits(BitChromosome),
    Real(RealVector),
}

impl Genome {
    pub fn len(&self) -> usize {
        match self {
            Genome::Bits(b) => b.len(),
            Genome::Real(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Genome::Bits(_) => "bits",
            Genome::Real(_) => "real",
        }
    }

    /// Short human-readable summary for logs.
    pub fn summary(&self) -> String {
        match self {
            Genome::Bits(b) => {
                let ones = b.bits().iter().filter(|&&x| x == 1).count();
                format!("bits[{}] ones={ones}", b.len())
            }
            Genome::Real(r) => format!("real[{}]", r.len()),
        }
    }
}

impl From<BitChromosome> for Genome {
    fn from(b: BitChromosome) -> Self {
        Genome::Bits(b)
    }
}

impl From<RealVector> for Genome {
    fn from(r: RealVector) -> Self {
        Genome::Real(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bitstring_encoding() {
        let b: BitChromosome = "10110".parse().unwrap();
        assert_eq!(b.bits(), &[1, 0, 1, 1, 0]);
        assert_eq!(serde_json::to_string(&Genome::Bits(b)).unwrap(), "\"10110\"");
        assert!("10a".parse::<BitChromosome>().is_err());
        assert!(BitChromosome::new(vec![0, 2]).is_err());
    }

    #[test]
    fn untagged_decode_picks_representation() {
        let g: Genome = serde_json::from_str("\"0011\"").unwrap();
        assert_eq!(g.kind(), "bits");
        let g: Genome = serde_json::from_str("[0.5, -1e-300]").unwrap();
        assert_eq!(g.kind(), "real");
    }

    proptest! {
        #[test]
        fn real_genome_round_trips_exactly(values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..64)) {
            let g = Genome::Real(RealVector::new(values.clone()));
            let text = serde_json::to_string(&g).unwrap();
            let back: Genome = serde_json::from_str(&text).unwrap();
            match back {
                Genome::Real(r) => {
                    let got: Vec<u64> = r.values().iter().map(|x| x.to_bits()).collect();
                    let want: Vec<u64> = values.iter().map(|x| x.to_bits()).collect();
                    prop_assert_eq!(got, want);
                }
                Genome::Bits(_) if values.is_empty() => {}
                Genome::Bits(_) => prop_assert!(false, "decoded as bits"),
            }
        }

        #[test]
        fn bit_genome_round_trips(bits in prop::collection::vec(0u8..2, 1..200)) {
            let g = Genome::Bits(BitChromosome::new(bits).unwrap());
            let back: Genome = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
