//! Shifted, group-rotated Rastrigin over a random coordinate partition
//! (the large-scale F15 benchmark).
//!
//! One `m x m` orthogonal matrix is shared by all `D / m` groups. Group `k`
//! (0-based) takes the shifted coordinates at positions
//! `P[k*m .. (k+1)*m]`, multiplies them as a row vector by `M`, and scores the
//! result with plain Rastrigin.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::rastrigin::{rastrigin_unchecked, SquareMatrix};
use crate::error::{invalid, Result};
use crate::rng::Mt64;

/// Default per-coordinate search domain.
pub const DEFAULT_BOUNDS: (f64, f64) = (-5.0, 5.0);

const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
const MIN_PIVOT_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct F15Spec {
    dimension: usize,
    group_size: usize,
    seed: u64,
    bounds: (f64, f64),
    shift: Vec<f64>,
    rotation: SquareMatrix,
    /// 0-based coordinate indices.
    permutation: Vec<usize>,
}

impl F15Spec {
    /// Assembles a spec from explicit parts, checking every invariant.
    /// `permutation` is 0-based.
    pub fn from_parts(
        group_size: usize,
        seed: u64,
        bounds: (f64, f64),
        shift: Vec<f64>,
        rotation: SquareMatrix,
        permutation: Vec<usize>,
    ) -> Result<Self> {
        let dimension = shift.len();
        check_shape(dimension, group_size, bounds)?;
        if rotation.dim() != group_size {
            return invalid(format!("rotation is {0}x{0}, group size is {group_size}", rotation.dim()));
        }
        let err = rotation.orthogonality_error();
        if !(err < ORTHOGONALITY_TOLERANCE) {
            return invalid(format!("rotation is not orthogonal (max |MM^T - I| = {err:e})"));
        }
        if permutation.len() != dimension {
            return invalid("permutation length differs from dimension");
        }
        let mut seen = vec![false; dimension];
        for &p in &permutation {
            if p >= dimension || std::mem::replace(&mut seen[p], true) {
                return invalid("permutation is not a bijection");
            }
        }
        if let Some(i) = shift.iter().position(|&o| !(bounds.0..=bounds.1).contains(&o)) {
            return invalid(format!("shift coordinate {i} lies outside the bounds"));
        }
        Ok(F15Spec { dimension, group_size, seed, bounds, shift, rotation, permutation })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn groups(&self) -> usize {
        self.dimension / self.group_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn rotation(&self) -> &SquareMatrix {
        &self.rotation
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Per-group rotated Rastrigin values, in group order.
    pub fn group_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut terms = Vec::with_capacity(self.groups());
        self.for_each_group(x, |t| terms.push(t));
        Ok(terms)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return invalid(format!("vector has {} coordinates, spec expects {}", x.len(), self.dimension));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite coordinate");
        }
        Ok(())
    }

    fn for_each_group(&self, x: &[f64], mut sink: impl FnMut(f64)) {
        let m = self.group_size;
        let mut gathered = vec![0.0; m];
        let mut rotated = vec![0.0; m];
        for group in self.permutation.chunks_exact(m) {
            for (g, &idx) in gathered.iter_mut().zip(group) {
                *g = x[idx] - self.shift[idx];
            }
            self.rotation.left_multiply_into(&gathered, &mut rotated);
            sink(rastrigin_unchecked(&rotated));
        }
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        self.for_each_group(x, |t| total += t);
        total
    }
}

fn check_shape(dimension: usize, group_size: usize, bounds: (f64, f64)) -> Result<()> {
    if group_size == 0 || dimension == 0 {
        return invalid("dimension and group size must be positive");
    }
    if dimension % group_size != 0 {
        return invalid(format!("dimension {dimension} is not divisible by group size {group_size}"));
    }
    if !(bounds.0 < bounds.1) || !bounds.0.is_finite() || !bounds.1.is_finite() {
        return invalid(format!("bounds ({}, {}) must be finite with lower < upper", bounds.0, bounds.1));
    }
    Ok(())
}

pub fn f15(x: &[f64], spec: &F15Spec) -> Result<f64> {
    spec.check_input(x)?;
    Ok(spec.evaluate_unchecked(x))
}

/// Generates a benchmark instance deterministically from `seed`.
///
/// Draw order from one [`Mt64`] stream:
/// 1. shift: `D` uniforms, `o[i] = lower + (upper - lower) * u`;
/// 2. rotation: `m*m` standard normals filling rows in order, then modified
///    Gram-Schmidt over the rows with one reorthogonalization pass; if any
///    row norm before normalization is below `1e-12` the whole matrix is
///    redrawn from the same stream;
/// 3. permutation: Fisher-Yates over the identity `0..D`.
pub fn make_f15_spec(dimension: usize, group_size: usize, seed: u64, bounds: (f64, f64)) -> Result<F15Spec> {
    check_shape(dimension, group_size, bounds)?;
    let mut rng = Mt64::new(seed);

    let shift: Vec<f64> = (0..dimension).map(|_| rng.uniform_in(bounds.0, bounds.1)).collect();

    let rotation = loop {
        let mut data: Vec<f64> = (0..group_size * group_size).map(|_| rng.gaussian()).collect();
        if orthonormalize_rows(group_size, &mut data) {
            break SquareMatrix::from_flat(group_size, data);
        }
    };

    let mut permutation: Vec<usize> = (0..dimension).collect();
    rng.shuffle(&mut permutation);

    Ok(F15Spec { dimension, group_size, seed, bounds, shift, rotation, permutation })
}

/// Returns false when a pivot collapses.
fn orthonormalize_rows(n: usize, data: &mut [f64]) -> bool {
    for i in 0..n {
        let (done, rest) = data.split_at_mut(i * n);
        let row = &mut rest[..n];
        for _pass in 0..2 {
            for prev in done.chunks_exact(n) {
                let proj: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
                row.iter_mut().zip(prev).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < MIN_PIVOT_NORM {
            return false;
        }
        row.iter_mut().for_each(|a| *a /= norm);
    }
    true
}

/// Archival JSON layout: `{D, m, seed, bounds, o, M, P}` with a 1-based `P`.
#[derive(Serialize, Deserialize)]
struct F15SpecDoc {
    #[serde(rename = "D")]
    dimension: usize,
    m: usize,
    seed: u64,
    bounds: (f64, f64),
    o: Vec<f64>,
    #[serde(rename = "M")]
    rotation: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    permutation: Vec<usize>,
}

impl Serialize for F15Spec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        F15SpecDoc {
            dimension: self.dimension,
            m: self.group_size,
            seed: self.seed,
            bounds: self.bounds,
            o: self.shift.clone(),
            rotation: self.rotation.to_rows(),
            permutation: self.permutation.iter().map(|p| p + 1).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for F15Spec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = F15SpecDoc::deserialize(deserializer)?;
        if doc.o.len() != doc.dimension {
            return Err(D::Error::custom("length of o differs from D"));
        }
        let permutation = doc
            .permutation
            .iter()
            .map(|&p| p.checked_sub(1).ok_or_else(|| D::Error::custom("P is 1-based")))
            .collect::<Result<Vec<_>, _>>()?;
        let rotation = SquareMatrix::from_rows(doc.rotation).map_err(D::Error::custom)?;
        F15Spec::from_parts(doc.m, doc.seed, doc.bounds, doc.o, rotation, permutation).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_spec(d: usize, m: usize, permutation: Vec<usize>) -> F15Spec {
        F15Spec::from_parts(m, 0, DEFAULT_BOUNDS, vec![0.0; d], SquareMatrix::identity(m), permutation).unwrap()
    }

    #[test]
    fn optimum_is_zero() {
        let spec = make_f15_spec(100, 10, 5, DEFAULT_BOUNDS).unwrap();
        let v = f15(spec.shift(), &spec).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn identity_parts_reduce_to_rastrigin() {
        let spec = identity_spec(4, 2, vec![0, 1, 2, 3]);
        assert!((f15(&[1.0; 4], &spec).unwrap() - 4.0).abs() < 1e-12);
        // P = (3,1,4,2) 1-based
        let spec = identity_spec(4, 2, vec![2, 0, 3, 1]);
        assert!((f15(&[1.0; 4], &spec).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(make_f15_spec(10, 3, 1, DEFAULT_BOUNDS).is_err());
        assert!(make_f15_spec(10, 5, 1, (1.0, 1.0)).is_err());
        let spec = make_f15_spec(10, 5, 1, DEFAULT_BOUNDS).unwrap();
        assert!(f15(&[0.0; 9], &spec).is_err());
        assert!(F15Spec::from_parts(2, 0, DEFAULT_BOUNDS, vec![0.0; 4], SquareMatrix::identity(2), vec![0, 0, 1, 2]).is_err());
        let skew = SquareMatrix::from_rows(vec![vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        assert!(F15Spec::from_parts(2, 0, DEFAULT_BOUNDS, vec![0.0; 4], skew, vec![0, 1, 2, 3]).is_err());
        assert!(F15Spec::from_parts(2, 0, DEFAULT_BOUNDS, vec![9.0; 4], SquareMatrix::identity(2), vec![0, 1, 2, 3]).is_err());
    }

    #[test]
    fn generation_is_deterministic_and_seed_sensitive() {
        let a = make_f15_spec(4, 2, 42, DEFAULT_BOUNDS).unwrap();
        let b = make_f15_spec(4, 2, 42, DEFAULT_BOUNDS).unwrap();
        assert_eq!(a, b);
        assert!(a.rotation().orthogonality_error() < 1e-10);
        let c = make_f15_spec(4, 2, 43, DEFAULT_BOUNDS).unwrap();
        assert!(a.shift() != c.shift() || a.rotation() != c.rotation() || a.permutation() != c.permutation());
    }

    // Frozen from the first implementation; guards the documented draw order.
    #[test]
    fn golden_spec_seed_42() {
        let s = make_f15_spec(4, 2, 42, DEFAULT_BOUNDS).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(s.shift()), GOLDEN_SHIFT_42);
        assert_eq!(bits(&s.rotation().to_rows().concat()), GOLDEN_ROTATION_42);
        assert_eq!(s.permutation(), GOLDEN_PERMUTATION_42);
    }

    const GOLDEN_SHIFT_42: [u64; 4] =
        [4612928010615695318, 4608940236508215072, 4612860223960677766, 13838744866687080351];
    const GOLDEN_ROTATION_42: [u64; 4] =
        [4606204916764979551, 13825205421526581076, 13825205421526581076, 13829576953619755358];
    const GOLDEN_PERMUTATION_42: [usize; 4] = [3, 2, 1, 0];

    #[test]
    fn json_round_trip_is_lossless() {
        let spec = make_f15_spec(20, 5, 9, (-3.0, 4.0)).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: F15Spec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["D", "m", "seed", "bounds", "o", "M", "P"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let p: Vec<usize> = serde_json::from_value(v["P"].clone()).unwrap();
        assert_eq!(*p.iter().min().unwrap(), 1);
        assert_eq!(*p.iter().max().unwrap(), 20);
    }
}
