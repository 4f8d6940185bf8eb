//! Variation and selection operators.

use crate::genome::Genome;
use crate::objective::{Direction, GenomeDomain};
use crate::rng::Mt64;

use super::population::Individual;

/// Draws `size` indices with replacement; the best wins, earliest draw on ties.
pub fn tournament(members: &[Individual], size: usize, direction: Direction, rng: &mut Mt64) -> usize {
    let mut winner = rng.below_usize(members.len());
    for _ in 1..size {
        let challenger = rng.below_usize(members.len());
        let (cf, wf) = (members[challenger].fitness, members[winner].fitness);
        if let (Some(cf), Some(wf)) = (cf, wf) {
            if direction.better(cf, wf) {
                winner = challenger;
            }
        }
    }
    winner
}

/// Two-point crossover for bitstrings, per-gene arithmetic blend for reals.
pub fn crossover(a: &mut Genome, b: &mut Genome, rng: &mut Mt64) {
    match (a, b) {
        (Genome::Bits(x), Genome::Bits(y)) => {
            let len = x.len();
            let mut lo = rng.below_usize(len + 1);
            let mut hi = rng.below_usize(len + 1);
            if lo > hi {
                std::mem::swap(&mut lo, &mut hi);
            }
            x.bits_mut()[lo..hi].swap_with_slice(&mut y.bits_mut()[lo..hi]);
        }
        (Genome::Real(x), Genome::Real(y)) => {
            for (xi, yi) in x.values_mut().iter_mut().zip(y.values_mut()) {
                let alpha = rng.uniform();
                let (p, q) = (*xi, *yi);
                *xi = alpha * p + (1.0 - alpha) * q;
                *yi = (1.0 - alpha) * p + alpha * q;
            }
        }
        _ => unreachable!("population genomes share one representation"),
    }
}

/// Visits each gene index selected with probability `rate`, skipping ahead by
/// geometric gaps so the cost is proportional to the number of mutations.
fn for_each_mutated(len: usize, rate: f64, rng: &mut Mt64, mut f: impl FnMut(usize, &mut Mt64)) {
    if rate <= 0.0 || len == 0 {
        return;
    }
    if rate >= 1.0 {
        (0..len).for_each(|i| f(i, rng));
        return;
    }
    let log_q = (1.0 - rate).ln();
    let mut pos = 0usize;
    loop {
        let u = 1.0 - rng.uniform();
        let gap = (u.ln() / log_q).floor();
        if !(gap < (len - pos) as f64) {
            return;
        }
        pos += gap as usize;
        f(pos, rng);
        pos += 1;
        if pos >= len {
            return;
        }
    }
}

/// Bit flips for bitstrings; Gaussian steps of 5% of the domain width,
/// clamped to the bounds, for reals.
pub fn mutate(genome: &mut Genome, rate: f64, domain: &GenomeDomain, rng: &mut Mt64) {
    match (genome, *domain) {
        (Genome::Bits(b), _) => {
            let bits = b.bits_mut();
            for_each_mutated(bits.len(), rate, rng, |i, _| bits[i] ^= 1);
        }
        (Genome::Real(r), GenomeDomain::Real { lower, upper, .. }) => {
            let sigma = 0.05 * (upper - lower);
            let values = r.values_mut();
            for_each_mutated(values.len(), rate, rng, |i, rng| {
                values[i] = (values[i] + sigma * rng.gaussian()).clamp(lower, upper);
            });
        }
        (Genome::Real(_), GenomeDomain::Bits { .. }) => unreachable!("domain checked at island start"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{BitChromosome, RealVector};

    #[test]
    fn two_point_crossover_conserves_column_sums() {
        let mut rng = Mt64::new(1);
        for _ in 0..100 {
            let mut a = Genome::Bits(BitChromosome::ones(20));
            let mut b = Genome::Bits(BitChromosome::zeros(20));
            crossover(&mut a, &mut b, &mut rng);
            let (Genome::Bits(a), Genome::Bits(b)) = (a, b) else { unreachable!() };
            assert!(a.bits().iter().zip(b.bits()).all(|(x, y)| x + y == 1));
            // exchanged region is contiguous
            let changes = a.bits().windows(2).filter(|w| w[0] != w[1]).count();
            assert!(changes <= 2);
        }
    }

    #[test]
    fn blend_stays_between_parents() {
        let mut rng = Mt64::new(2);
        let mut a = Genome::Real(RealVector::new(vec![0.0; 50]));
        let mut b = Genome::Real(RealVector::new(vec![1.0; 50]));
        crossover(&mut a, &mut b, &mut rng);
        let (Genome::Real(a), Genome::Real(b)) = (a, b) else { unreachable!() };
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((0.0..=1.0).contains(x));
            assert!((x + y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mutation_rate_is_respected() {
        let mut rng = Mt64::new(3);
        let domain = GenomeDomain::Bits { len: 1000 };
        let mut flips = 0usize;
        for _ in 0..200 {
            let mut g = Genome::Bits(BitChromosome::zeros(1000));
            mutate(&mut g, 0.01, &domain, &mut rng);
            let Genome::Bits(b) = g else { unreachable!() };
            flips += b.bits().iter().filter(|&&x| x == 1).count();
        }
        // expected 2000 flips
        assert!((1800..2200).contains(&flips), "{flips}");

        let mut g = Genome::Bits(BitChromosome::zeros(10));
        mutate(&mut g, 0.0, &domain, &mut rng);
        assert_eq!(g, Genome::Bits(BitChromosome::zeros(10)));
        mutate(&mut g, 1.0, &domain, &mut rng);
        assert_eq!(g, Genome::Bits(BitChromosome::ones(10)));
    }

    #[test]
    fn real_mutation_clamps() {
        let mut rng = Mt64::new(4);
        let domain = GenomeDomain::Real { len: 100, lower: -1.0, upper: 1.0 };
        let mut g = Genome::Real(RealVector::new(vec![1.0; 100]));
        for _ in 0..50 {
            mutate(&mut g, 1.0, &domain, &mut rng);
        }
        let Genome::Real(r) = g else { unreachable!() };
        assert!(r.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn tournament_prefers_better() {
        let mut rng = Mt64::new(5);
        let members: Vec<Individual> = (0..10)
            .map(|i| Individual::evaluated(Genome::Real(RealVector::new(vec![0.0])), i as f64))
            .collect();
        let wins_top = (0..10_000)
            .filter(|_| tournament(&members, 2, Direction::Maximize, &mut rng) == 9)
            .count();
        // P(top wins a binary tournament) = 1 - (9/10)^2 = 0.19
        assert!((1700..2100).contains(&wins_top), "{wins_top}");
    }
}
