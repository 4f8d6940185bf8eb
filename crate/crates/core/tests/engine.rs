use poolevo::ea::*;
use poolevo::genome::Genome;
use poolevo::objective::{Direction, Objective, ProblemDef, TrapParams};
use poolevo::rng::Mt64;
use proptest::prelude::*;

fn trap(blocks: usize) -> (ProblemDef, IslandConfig) {
    let def = ProblemDef::Trap(TrapParams::classic(blocks));
    let mut cfg = IslandConfig::for_problem(&def);
    cfg.population_size = 32;
    cfg.max_evaluations = 20_000;
    (def, cfg)
}

fn small_f15() -> (ProblemDef, IslandConfig) {
    let def = ProblemDef::F15 { dimension: 10, group_size: 5, seed: 3, bounds: (-5.0, 5.0) };
    let mut cfg = IslandConfig::for_problem(&def);
    cfg.population_size = 20;
    cfg.max_evaluations = 4_000;
    (def, cfg)
}

fn run(def: &ProblemDef, cfg: &IslandConfig, seed: u64, hooks: Option<&mut dyn MigrationHooks>) -> IslandResult {
    let problem = def.build().unwrap();
    run_island(cfg, &problem, hooks, &StopSignal::new(), &mut Mt64::new(seed)).unwrap()
}

fn monotone(history: &[f64], dir: Direction) -> bool {
    history.windows(2).all(|w| !dir.better(w[0], w[1]))
}

#[test]
fn best_fitness_never_degrades() {
    let (def, cfg) = trap(8);
    for seed in 0..5 {
        let r = run(&def, &cfg, seed, None);
        assert!(monotone(&r.record.history, Direction::Maximize));
        assert_eq!(r.record.history.len() as u64, r.record.generations + 1);
    }
    let (def, cfg) = small_f15();
    let r = run(&def, &cfg, 9, None);
    assert!(monotone(&r.record.history, Direction::Minimize));
    assert!(r.record.best_fitness <= r.record.history[0]);
}

#[test]
fn evaluation_accounting() {
    let (def, cfg) = trap(6);
    let problem = def.build().unwrap();
    let mut rng = Mt64::new(5);
    let mut state = init_island(&cfg, &problem, &mut rng).unwrap();
    assert_eq!(state.evaluations, 32);
    for g in 1..=10 {
        step_generation(&mut state, &cfg, &problem, &mut rng);
        assert_eq!(state.generation, g);
        assert_eq!(state.evaluations, 32 + g * 31);
        assert_eq!(state.population.len(), 32);
    }
}

#[test]
fn budget_stops_the_run() {
    let (def, mut cfg) = trap(40);
    cfg.max_evaluations = 1_000;
    let r = run(&def, &cfg, 1, None);
    assert_eq!(r.record.outcome, IslandOutcome::BudgetExhausted);
    assert!(!r.solved());
    assert!(r.record.evaluations >= 1_000 && r.record.evaluations < 1_000 + 32);
}

#[test]
fn seeded_runs_repeat_exactly() {
    let (def, cfg) = trap(6);
    assert_eq!(run(&def, &cfg, 77, None).record, run(&def, &cfg, 77, None).record);
    let (def, cfg) = small_f15();
    let a = run(&def, &cfg, 77, None).record;
    let b = run(&def, &cfg, 77, None).record;
    assert_eq!(a, b);
    assert_eq!(a.best_fitness.to_bits(), b.best_fitness.to_bits());
}

#[test]
fn elite_survives_each_generation() {
    let (def, cfg) = trap(8);
    let problem = def.build().unwrap();
    let mut rng = Mt64::new(2);
    let mut state = init_island(&cfg, &problem, &mut rng).unwrap();
    for _ in 0..20 {
        let elite = state.best_ever.clone();
        step_generation(&mut state, &cfg, &problem, &mut rng);
        assert!(state.population.members().contains(&elite));
        assert!(state.best_fitness() >= elite.fitness.unwrap());
    }
}

#[test]
fn clones_of_the_optimum_are_a_fixed_point() {
    let (def, mut cfg) = trap(4);
    cfg.mutation_rate = Some(0.0);
    let problem = def.build().unwrap();
    let mut rng = Mt64::new(1);
    let mut state = init_island(&cfg, &problem, &mut rng).unwrap();
    let ones = Genome::Bits(poolevo::genome::BitChromosome::ones(16));
    let best = Individual::evaluated(ones.clone(), 8.0);
    state.population = Population::new(vec![best.clone(); 32]).unwrap();
    state.best_ever = best.clone();
    step_generation(&mut state, &cfg, &problem, &mut rng);
    assert!(state.population.members().iter().all(|m| *m == best));
    assert_eq!(state.best_ever, best);
}

#[test]
fn no_variation_only_copies_parents() {
    let (def, mut cfg) = trap(8);
    cfg.mutation_rate = Some(0.0);
    cfg.crossover_rate = 0.0;
    let problem = def.build().unwrap();
    let mut rng = Mt64::new(4);
    let mut state = init_island(&cfg, &problem, &mut rng).unwrap();
    for _ in 0..5 {
        let parents: Vec<Genome> = state.population.members().iter().map(|m| m.genome.clone()).collect();
        let before = state.best_fitness();
        step_generation(&mut state, &cfg, &problem, &mut rng);
        assert!(state.population.members().iter().all(|m| parents.contains(&m.genome)));
        assert!(state.best_fitness() >= before);
    }
}

#[test]
fn preset_stop_signal() {
    let (def, cfg) = trap(40);
    let problem = def.build().unwrap();
    let stop = StopSignal::new();
    stop.stop();
    let r = run_island(&cfg, &problem, None, &stop, &mut Mt64::new(1)).unwrap();
    assert_eq!(r.record.outcome, IslandOutcome::Stopped);
    assert_eq!(r.record.generations, 0);
}

#[test]
fn invalid_config_is_rejected() {
    let (def, mut cfg) = trap(2);
    cfg.tournament_size = 1;
    let problem = def.build().unwrap();
    assert!(run_island(&cfg, &problem, None, &StopSignal::new(), &mut Mt64::new(1)).is_err());
    cfg.tournament_size = 2;
    cfg.migration_interval = 0;
    assert!(cfg.validate().is_err());
}

#[derive(Default)]
struct Recorder {
    emits: Vec<(u64, bool)>,
    requests: u64,
    migrant: Option<Individual>,
    outcome_after: Option<(usize, EmitOutcome)>,
}

impl MigrationHooks for Recorder {
    fn emit_best(&mut self, ctx: &ExchangeContext<'_>) -> Result<EmitOutcome, HookError> {
        self.emits.push((ctx.generation, ctx.solution));
        match self.outcome_after {
            Some((n, o)) if self.emits.len() >= n => Ok(o),
            _ => Ok(EmitOutcome::Continue),
        }
    }

    fn request_migrant(&mut self) -> Result<Option<Individual>, HookError> {
        self.requests += 1;
        Ok(self.migrant.clone())
    }
}

struct Broken;

impl MigrationHooks for Broken {
    fn emit_best(&mut self, _: &ExchangeContext<'_>) -> Result<EmitOutcome, HookError> {
        Err(HookError::Unavailable("connection refused".into()))
    }

    fn request_migrant(&mut self) -> Result<Option<Individual>, HookError> {
        Err(HookError::Unavailable("connection refused".into()))
    }
}

#[test]
fn failing_hooks_match_a_local_run() {
    let (def, mut cfg) = trap(10);
    cfg.migration_interval = 3;
    for seed in 0..4 {
        let local = run(&def, &cfg, seed, None);
        let mut broken = Broken;
        let remote = run(&def, &cfg, seed, Some(&mut broken));
        assert_eq!(local.record, remote.record);
    }
}

#[test]
fn boundary_reports_follow_the_interval() {
    let (def, mut cfg) = trap(40);
    cfg.migration_interval = 7;
    cfg.max_evaluations = 32 * 50;
    let mut rec = Recorder::default();
    let r = run(&def, &cfg, 3, Some(&mut rec));
    assert!(!r.solved());
    let expected: Vec<(u64, bool)> = (1..=r.record.generations / 7).map(|k| (7 * k, false)).collect();
    assert_eq!(rec.emits, expected);
    assert_eq!(rec.requests, expected.len() as u64);
}

#[test]
fn solving_island_reports_once_with_solution_flag() {
    let (def, mut cfg) = trap(2);
    cfg.migration_interval = 1;
    cfg.population_size = 8;
    let mut rec = Recorder::default();
    let r = run(&def, &cfg, 8, Some(&mut rec));
    assert!(r.solved());
    assert_eq!(rec.emits.iter().filter(|e| e.1).count(), 1);
    assert_eq!(rec.emits.last().unwrap(), &(r.record.generations, true));
    assert_eq!(rec.emits.len() as u64, r.record.generations + 1 - u64::from(r.record.generations > 0));
}

#[test]
fn migrants_are_reevaluated_and_counted() {
    let (def, mut cfg) = trap(40);
    cfg.migration_interval = 5;
    cfg.max_evaluations = 32 * 20;
    let problem = def.build().unwrap();
    let ones = Genome::Bits(poolevo::genome::BitChromosome::ones(160));
    // A lying fitness: the island must use its own evaluation.
    let mut rec = Recorder { migrant: Some(Individual::evaluated(ones.clone(), -1.0)), ..Default::default() };
    let r = run_island(&cfg, &problem, Some(&mut rec), &StopSignal::new(), &mut Mt64::new(2)).unwrap();
    assert!(r.solved());
    assert_eq!(r.record.best_genome, ones);
    assert_eq!(r.record.best_fitness, 80.0);
    assert_eq!(r.record.migrants_received, 1);
    assert_eq!(r.record.evaluations, 32 + 5 * 31 + 1);
}

#[test]
fn hook_outcomes_end_the_run() {
    let (def, mut cfg) = trap(40);
    cfg.migration_interval = 2;
    let mut rec = Recorder { outcome_after: Some((2, EmitOutcome::Restart)), ..Default::default() };
    let r = run(&def, &cfg, 1, Some(&mut rec));
    assert_eq!(r.record.outcome, IslandOutcome::ExperimentChanged);
    assert_eq!(r.record.generations, 4);
    assert_eq!(rec.requests, 1);

    let mut rec = Recorder { outcome_after: Some((1, EmitOutcome::Solved)), ..Default::default() };
    let r = run(&def, &cfg, 1, Some(&mut rec));
    assert_eq!(r.record.outcome, IslandOutcome::Solved);
    assert!(r.solved());
    assert_eq!(rec.emits, vec![(2, false)]);
}

#[test]
fn uuid_comes_from_the_island_stream() {
    let (def, cfg) = trap(4);
    let a = run(&def, &cfg, 10, None).record.uuid;
    let b = run(&def, &cfg, 11, None).record.uuid;
    assert_ne!(a, b);
    assert_eq!(a, run(&def, &cfg, 10, None).record.uuid);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_offspring_stay_in_bounds(seed in any::<u64>()) {
        let (def, cfg) = small_f15();
        let problem = def.build().unwrap();
        let mut rng = Mt64::new(seed);
        let mut state = init_island(&cfg, &problem, &mut rng).unwrap();
        for _ in 0..5 {
            step_generation(&mut state, &cfg, &problem, &mut rng);
        }
        for m in state.population.members() {
            prop_assert!(problem.domain().check(&m.genome).is_ok());
            let Genome::Real(v) = &m.genome else { panic!("expected reals") };
            prop_assert!(v.values().iter().all(|x| (-5.0..=5.0).contains(x)));
        }
    }

    #[test]
    fn population_range_is_respected(seed in any::<u64>(), lo in 2usize..20, extra in 0usize..20) {
        let (def, mut cfg) = trap(2);
        cfg.pop_size_range = Some((lo, lo + extra));
        let problem = def.build().unwrap();
        let state = init_island(&cfg, &problem, &mut Mt64::new(seed)).unwrap();
        prop_assert!((lo..=lo + extra).contains(&state.population.len()));
    }
}
