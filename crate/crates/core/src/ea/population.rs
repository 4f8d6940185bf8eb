use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::genome::Genome;
use crate::objective::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: Option<f64>,
}

impl Individual {
    pub fn new(genome: Genome) -> Self {
        Individual { genome, fitness: None }
    }

    pub fn evaluated(genome: Genome, fitness: f64) -> Self {
        Individual { genome, fitness: Some(fitness) }
    }

    pub fn fitness(&self) -> Result<f64> {
        self.fitness
            .ok_or_else(|| Error::Contract("individual has not been evaluated".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        if members.len() < 2 {
            return invalid(format!("population needs at least 2 members, got {}", members.len()));
        }
        let first = &members[0].genome;
        if let Some(i) = members
            .iter()
            .position(|m| m.genome.kind() != first.kind() || m.genome.len() != first.len())
        {
            return invalid(format!("member {i} has a different genome shape from member 0"));
        }
        Ok(Population { members })
    }

    pub(crate) fn from_vec_unchecked(members: Vec<Individual>) -> Self {
        Population { members }
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn fitnesses(&self) -> Result<Vec<f64>> {
        self.members.iter().map(Individual::fitness).collect()
    }
}

/// Best member; ties go to the lowest index.
pub fn best_of(pop: &Population, direction: Direction) -> Result<(usize, &Individual)> {
    let mut best = 0;
    let mut best_fit = pop.members[0].fitness()?;
    for (i, m) in pop.members.iter().enumerate().skip(1) {
        let f = m.fitness()?;
        if direction.better(f, best_fit) {
            best = i;
            best_fit = f;
        }
    }
    Ok((best, &pop.members[best]))
}

/// Worst member; ties go to the highest index so the elite slot at index 0
/// survives a population of equals.
pub fn worst_of(pop: &Population, direction: Direction) -> Result<usize> {
    let mut worst = 0;
    let mut worst_fit = pop.members[0].fitness()?;
    for (i, m) in pop.members.iter().enumerate().skip(1) {
        let f = m.fitness()?;
        if !direction.better(f, worst_fit) {
            worst = i;
            worst_fit = f;
        }
    }
    Ok(worst)
}

/// Replaces the worst member with `migrant`, unconditionally. Returns the
/// index that was overwritten.
pub fn insert_migrant(pop: &mut Population, migrant: Individual, direction: Direction) -> Result<usize> {
    migrant.fitness()?;
    let reference = &pop.members[0].genome;
    if migrant.genome.kind() != reference.kind() || migrant.genome.len() != reference.len() {
        return invalid(format!(
            "migrant genome ({} of length {}) is incompatible with the population ({} of length {})",
            migrant.genome.kind(),
            migrant.genome.len(),
            reference.kind(),
            reference.len()
        ));
    }
    let worst = worst_of(pop, direction)?;
    pop.members[worst] = migrant;
    Ok(worst)
}
