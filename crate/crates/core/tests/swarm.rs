use poolevo::harness::{run_swarm, ChurnModel, SwarmScenario};
use poolevo::objective::{ProblemDef, TrapParams};

fn scenario(blocks: usize, clients: usize, seed: u64) -> SwarmScenario {
    let mut s = SwarmScenario::new(ProblemDef::Trap(TrapParams::classic(blocks)), clients, seed);
    s.client.island.pop_size_range = Some((16, 32));
    s.client.island.migration_interval = 10;
    s.client.island.max_evaluations = 20_000;
    s.client.retry.initial_backoff_ms = 20;
    s.client.retry.max_backoff_ms = 200;
    s.duration_limit_ms = 30_000;
    s
}

#[test]
fn single_client_without_churn() {
    let report = run_swarm(&scenario(4, 1, 1)).unwrap();
    assert_eq!(report.per_client.len(), 1);
    let session = &report.per_client[0];
    assert!(!session.killed_by_churn);
    assert_eq!(session.report.islands.len(), 2);
    assert!(report.solutions >= 1);
    assert!(report.time_to_first_solution_seconds.unwrap() <= report.wall_time_seconds);
    assert_eq!(report.server_stats.puts, session.report.exchange.puts);
    assert_eq!(report.server_stats.solutions, report.solutions);
    assert_eq!(report.client_solutions as u64, report.solutions);
}

#[test]
fn solution_target_is_reached() {
    let mut s = scenario(4, 2, 2);
    s.solution_target = 5;
    let report = run_swarm(&s).unwrap();
    assert!(report.solutions >= 5);
    assert!(report.solution_times_seconds.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn every_client_killed_once_still_solves() {
    let mut s = scenario(24, 3, 3);
    s.client.island.pop_size_range = Some((32, 64));
    s.client.island.max_evaluations = 50_000;
    s.solution_target = 3;
    s.churn = ChurnModel { join_jitter_ms: 10, mean_session_ms: None, rejoin_probability: 0.0, kill_all_after_ms: Some(30) };
    let report = run_swarm(&s).unwrap();
    for c in 0..3 {
        let sessions: Vec<_> = report.per_client.iter().filter(|p| p.client == c).collect();
        assert_eq!(sessions.len(), 2, "client {c}");
        assert!(sessions[0].killed_by_churn && !sessions[1].killed_by_churn);
        assert_ne!(sessions[0].seed, sessions[1].seed);
    }
    assert!(report.solutions >= 3);
    assert!(report.solution_times_seconds.last().unwrap() > &0.03);
}

#[test]
fn exponential_sessions_churn_clients() {
    let mut s = scenario(40, 2, 5);
    s.churn = ChurnModel { join_jitter_ms: 20, mean_session_ms: Some(40.0), rejoin_probability: 1.0, kill_all_after_ms: None };
    s.duration_limit_ms = 600;
    let report = run_swarm(&s).unwrap();
    for c in 0..2 {
        let sessions: Vec<_> = report.per_client.iter().filter(|p| p.client == c).collect();
        assert!(sessions.len() >= 2, "client {c}");
        assert!(sessions[..sessions.len() - 1].iter().all(|p| p.killed_by_churn));
    }
}

#[test]
fn killed_server_leaves_clients_running() {
    let mut s = scenario(40, 2, 4);
    s.server_kill_after_ms = Some(200);
    s.duration_limit_ms = 900;
    s.client.island.migration_interval = 2;
    let report = run_swarm(&s).unwrap();
    assert!(report.server_killed_at_seconds.is_some());
    assert!(report.server_stats.puts > 0);
    let failures: u64 = report.per_client.iter().map(|p| p.report.request_failures).sum();
    assert!(failures > 0);
    for p in &report.per_client {
        for island in &p.report.islands {
            assert!(island.incarnations.last().unwrap().record.generations > 0);
        }
    }
    assert!(report.wall_time_seconds >= 0.85);
}

#[test]
fn zero_clients_rejected() {
    assert!(run_swarm(&scenario(4, 0, 1)).is_err());
}
