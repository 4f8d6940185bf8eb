//! Benchmark objectives and the problem definitions shared by server and clients.

mod f15;
mod rastrigin;
mod trap;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use f15::{f15, make_f15_spec, F15Spec, DEFAULT_BOUNDS};
pub use rastrigin::{rastrigin, rotated_rastrigin, SquareMatrix};
pub use trap::{trap_fitness, TrapParams};

use crate::error::{invalid, Result};
use crate::genome::{BitChromosome, Genome, RealVector};
use crate::rng::Mt64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }

    pub fn meets(self, fitness: f64, target: f64) -> bool {
        match self {
            Direction::Maximize => fitness >= target,
            Direction::Minimize => fitness <= target,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maximize" | "max" => Ok(Direction::Maximize),
            "minimize" | "min" => Ok(Direction::Minimize),
            other => invalid(format!("unknown direction {other:?}")),
        }
    }
}

/// Shape of the genomes an objective accepts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenomeDomain {
    Bits { len: usize },
    Real { len: usize, lower: f64, upper: f64 },
}

impl GenomeDomain {
    pub fn len(&self) -> usize {
        match *self {
            GenomeDomain::Bits { len } | GenomeDomain::Real { len, .. } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn random_genome(&self, rng: &mut Mt64) -> Genome {
        match *self {
            GenomeDomain::Bits { len } => {
                let bits = (0..len).map(|_| (rng.next_u64() >> 63) as u8).collect();
                Genome::Bits(BitChromosome::new(bits).expect("fair-coin bits are 0/1"))
            }
            GenomeDomain::Real { len, lower, upper } => {
                Genome::Real(RealVector::new((0..len).map(|_| rng.uniform_in(lower, upper)).collect()))
            }
        }
    }

    pub fn check(&self, genome: &Genome) -> Result<()> {
        match (*self, genome) {
            (GenomeDomain::Bits { len }, Genome::Bits(b)) if b.len() == len => Ok(()),
            (GenomeDomain::Real { len, .. }, Genome::Real(r)) if r.len() == len => {
                if r.values().iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    invalid("real genome has non-finite coordinates")
                }
            }
            (domain, g) => invalid(format!(
                "genome {} of length {} does not fit a {:?} domain of length {}",
                g.kind(),
                g.len(),
                domain,
                domain.len()
            )),
        }
    }
}

/// The fitness function an island optimizes. Swapping the objective is the
/// only change needed to attack a different problem.
pub trait Objective: Send + Sync {
    fn domain(&self) -> GenomeDomain;

    /// Fitness of a genome already known to fit [`Objective::domain`].
    fn evaluate_unchecked(&self, genome: &Genome) -> f64;

    fn evaluate(&self, genome: &Genome) -> Result<f64> {
        self.domain().check(genome)?;
        Ok(self.evaluate_unchecked(genome))
    }
}

/// Serializable problem definition; the server fixes one at startup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemDef {
    Trap(TrapParams),
    #[serde(rename_all = "camelCase")]
    F15 {
        dimension: usize,
        group_size: usize,
        seed: u64,
        #[serde(default = "default_bounds")]
        bounds: (f64, f64),
    },
}

fn default_bounds() -> (f64, f64) {
    DEFAULT_BOUNDS
}

/// Default target for F15 runs; exact zero is not reachable in practice.
pub const DEFAULT_F15_TARGET: f64 = 1e-6;

impl ProblemDef {
    pub fn build(&self) -> Result<Problem> {
        match self {
            ProblemDef::Trap(p) => {
                p.validate()?;
                Ok(Problem::Trap(*p))
            }
            ProblemDef::F15 { dimension, group_size, seed, bounds } => {
                Ok(Problem::F15(Arc::new(make_f15_spec(*dimension, *group_size, *seed, *bounds)?)))
            }
        }
    }

    pub fn default_direction(&self) -> Direction {
        match self {
            ProblemDef::Trap(_) => Direction::Maximize,
            ProblemDef::F15 { .. } => Direction::Minimize,
        }
    }

    pub fn default_target(&self) -> f64 {
        match self {
            ProblemDef::Trap(p) => p.optimum(),
            ProblemDef::F15 { .. } => DEFAULT_F15_TARGET,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Trap(TrapParams),
    F15(Arc<F15Spec>),
}

impl Objective for Problem {
    fn domain(&self) -> GenomeDomain {
        match self {
            Problem::Trap(p) => GenomeDomain::Bits { len: p.length() },
            Problem::F15(spec) => {
                let (lower, upper) = spec.bounds();
                GenomeDomain::Real { len: spec.dimension(), lower, upper }
            }
        }
    }

    fn evaluate_unchecked(&self, genome: &Genome) -> f64 {
        match (self, genome) {
            (Problem::Trap(p), Genome::Bits(b)) => trap::trap_fitness_unchecked(b.bits(), p),
            (Problem::F15(spec), Genome::Real(x)) => spec.evaluate_unchecked(x.values()),
            _ => unreachable!("genome representation checked against the domain"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_def_json() {
        let def: ProblemDef =
            serde_json::from_str(r#"{"kind":"trap","l":4,"a":1.0,"b":2.0,"z":3,"numBlocks":40}"#).unwrap();
        assert_eq!(def, ProblemDef::Trap(TrapParams::classic(40)));
        assert_eq!(def.default_target(), 80.0);
        let def: ProblemDef = serde_json::from_str(r#"{"kind":"f15","dimension":20,"groupSize":5,"seed":1}"#).unwrap();
        assert_eq!(def.default_direction(), Direction::Minimize);
        let problem = def.build().unwrap();
        assert_eq!(problem.domain().len(), 20);
    }

    #[test]
    fn objective_checks_domain() {
        let p = Problem::Trap(TrapParams::classic(2));
        assert_eq!(p.evaluate(&Genome::Bits(BitChromosome::ones(8))).unwrap(), 4.0);
        assert!(p.evaluate(&Genome::Bits(BitChromosome::ones(9))).is_err());
        assert!(p.evaluate(&Genome::Real(RealVector::zeros(8))).is_err());
    }

    #[test]
    fn direction_semantics() {
        assert!(Direction::Maximize.better(2.0, 1.0));
        assert!(Direction::Minimize.better(1.0, 2.0));
        assert!(!Direction::Minimize.better(1.0, 1.0));
        assert!(Direction::Minimize.meets(0.0, 1e-6));
        assert!(!Direction::Maximize.meets(79.0, 80.0));
    }
}
