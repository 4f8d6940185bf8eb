use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use poolevo::client::{run_client, ClientConfig};
use poolevo::ea::StopSignal;
use poolevo::harness::{
    run_baseline_with, run_swarm, time_f15, write_json, BaselineParams, BaselineReport, ChurnModel, SwarmScenario,
    DEFAULT_TIMED_EVALUATIONS,
};
use poolevo::objective::{make_f15_spec, Objective, ProblemDef, TrapParams, DEFAULT_BOUNDS};
use poolevo::server::{spawn_server, ServerConfig};

#[derive(Parser)]
#[command(name = "poolevo", version, about = "Pool-based island evolutionary algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pool server until killed.
    Serve(ServeArgs),
    /// Run a headless client with several islands.
    Client(ClientArgs),
    /// Independent single-island runs without migration.
    Baseline(BaselineArgs),
    /// Many clients with churn against an embedded server.
    Swarm(SwarmArgs),
    /// Time F15 evaluations.
    TimeF15(TimeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Trap,
    F15,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "trap")]
    problem: ProblemKind,
    /// Trap blocks.
    #[arg(long, default_value_t = 40)]
    blocks: usize,
    #[arg(long, default_value_t = 4)]
    trap_l: usize,
    #[arg(long, default_value_t = 1.0)]
    trap_a: f64,
    #[arg(long, default_value_t = 2.0)]
    trap_b: f64,
    #[arg(long, default_value_t = 3)]
    trap_z: usize,
    #[arg(long, default_value_t = 1000)]
    dimension: usize,
    #[arg(long, default_value_t = 50)]
    group_size: usize,
    #[arg(long, default_value_t = 1)]
    f15_seed: u64,
    #[arg(long, default_value_t = DEFAULT_BOUNDS.0, allow_hyphen_values = true)]
    lower: f64,
    #[arg(long, default_value_t = DEFAULT_BOUNDS.1, allow_hyphen_values = true)]
    upper: f64,
    /// Target fitness; defaults to the problem optimum.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<f64>,
}

impl ProblemArgs {
    fn def(&self) -> ProblemDef {
        match self.problem {
            ProblemKind::Trap => ProblemDef::Trap(TrapParams {
                l: self.trap_l,
                a: self.trap_a,
                b: self.trap_b,
                z: self.trap_z,
                num_blocks: self.blocks,
            }),
            ProblemKind::F15 => ProblemDef::F15 {
                dimension: self.dimension,
                group_size: self.group_size,
                seed: self.f15_seed,
                bounds: (self.lower, self.upper),
            },
        }
    }
}

#[derive(Args)]
struct ServeArgs {
    /// TOML configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    verify_fitness: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the problem flags instead of the configured problem.
    #[arg(long)]
    override_problem: bool,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct IslandArgs {
    #[arg(long)]
    pop_min: Option<usize>,
    #[arg(long)]
    pop_max: Option<usize>,
    #[arg(long)]
    migration_interval: Option<u64>,
    #[arg(long)]
    max_evaluations: Option<u64>,
}

#[derive(Args)]
struct ClientArgs {
    #[arg(long, default_value = "http://127.0.0.1:8080")]
    server: String,
    /// Run without a server.
    #[arg(long)]
    offline: bool,
    #[arg(long, default_value_t = 2)]
    islands: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop after this many seconds.
    #[arg(long)]
    duration_secs: Option<f64>,
    /// Incarnations per island before it goes idle.
    #[arg(long)]
    incarnations: Option<u64>,
    #[arg(long)]
    no_restart: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    island: IslandArgs,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, default_value_t = 1024)]
    pop: usize,
    /// Also run this population size on the same seeds.
    #[arg(long)]
    compare_pop: Option<usize>,
    #[arg(long, default_value_t = 50)]
    runs: u64,
    #[arg(long, default_value_t = 5_000_000)]
    max_evaluations: u64,
    #[arg(long, default_value_t = 2015)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Fail unless success(pop) >= --min-success-rate and, with
    /// --compare-pop, success(compare) < success(pop).
    #[arg(long)]
    assert: bool,
    #[arg(long, default_value_t = 0.9)]
    min_success_rate: f64,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct SwarmArgs {
    #[arg(long, default_value_t = 4)]
    clients: usize,
    #[arg(long, default_value_t = 2)]
    islands: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    duration_secs: f64,
    #[arg(long, default_value_t = 1)]
    solutions: u64,
    #[arg(long, default_value_t = 0)]
    join_jitter_ms: u64,
    #[arg(long)]
    mean_session_ms: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rejoin_prob: f64,
    /// End every client's first session at this time; they all rejoin.
    #[arg(long)]
    kill_clients_after_ms: Option<u64>,
    #[arg(long)]
    kill_server_after_ms: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail unless the requested number of solutions was reached.
    #[arg(long)]
    assert: bool,
    #[command(flatten)]
    island: IslandArgs,
    #[command(flatten)]
    problem: ProblemArgs,
}

#[derive(Args)]
struct TimeArgs {
    #[arg(long, default_value_t = 1000)]
    dimension: usize,
    #[arg(long, default_value_t = 50)]
    group_size: usize,
    #[arg(long, default_value_t = DEFAULT_TIMED_EVALUATIONS)]
    evaluations: u64,
    #[arg(long, default_value_t = 1)]
    spec_seed: u64,
    /// Seed of the sample points.
    #[arg(long, default_value_t = 2)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail unless the report is well formed.
    #[arg(long)]
    assert: bool,
}

fn apply_island(args: &IslandArgs, problem: &ProblemArgs, config: &mut ClientConfig) {
    let (lo, hi) = config.island.pop_size_range.unwrap_or((config.island.population_size, config.island.population_size));
    let lo = args.pop_min.unwrap_or(lo);
    let hi = args.pop_max.unwrap_or(hi.max(lo));
    config.island.pop_size_range = Some((lo, hi));
    if let Some(n) = args.migration_interval {
        config.island.migration_interval = n;
    }
    if let Some(n) = args.max_evaluations {
        config.island.max_evaluations = n;
    }
    if let Some(t) = problem.target {
        config.island.target_fitness = t;
    }
}

type CmdResult = Result<bool, Box<dyn std::error::Error>>;

fn serve(args: ServeArgs) -> CmdResult {
    let mut config = match &args.config {
        Some(path) => ServerConfig::from_toml_file(path)?,
        None => ServerConfig { problem: args.problem.def(), ..ServerConfig::default() },
    };
    if args.override_problem {
        config.problem = args.problem.def();
    }
    if args.problem.target.is_some() {
        config.target_fitness = args.problem.target;
    }
    if let Some(b) = args.bind {
        config.bind = b;
    }
    if let Some(c) = args.capacity {
        config.pool_capacity = c;
    }
    if args.log.is_some() {
        config.log_path = args.log;
    }
    if args.static_dir.is_some() {
        config.static_dir = args.static_dir;
    }
    config.verify_fitness |= args.verify_fitness;
    if let Some(s) = args.seed {
        config.rng_seed = s;
    }
    let handle = spawn_server(&config)?;
    println!("pool server listening on {}", handle.url());
    handle.wait();
    Ok(true)
}

fn client(args: ClientArgs) -> CmdResult {
    let def = args.problem.def();
    let server = (!args.offline).then(|| args.server.clone());
    let mut config = ClientConfig::new(server, &def, args.seed);
    config.island_count = args.islands;
    config.restart_on_solution = !args.no_restart;
    config.max_incarnations = args.incarnations;
    apply_island(&args.island, &args.problem, &mut config);
    let objective: Arc<dyn Objective> = Arc::new(def.build()?);
    let stop = StopSignal::new();
    if let Some(secs) = args.duration_secs {
        let stop = stop.clone();
        std::thread::spawn(move || {
            std::thread::sleep(Duration::from_secs_f64(secs));
            stop.stop();
        });
    }
    let report = run_client(&config, objective, &stop)?;
    println!(
        "{} solutions, {} requests ({} failed) in {:.2} s",
        report.solutions_found, report.requests_sent, report.request_failures, report.wall_time_seconds
    );
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    Ok(true)
}

fn print_baseline(r: &BaselineReport) {
    println!(
        "pop {}: {}/{} solved ({:.0}%), mean evaluations {}, mean time {}",
        r.population_size,
        r.successes,
        r.runs,
        100.0 * r.success_rate,
        r.mean_evaluations.map_or("-".into(), |v| format!("{v:.0}")),
        r.mean_time_to_solution_seconds.map_or("-".into(), |v| format!("{v:.3} s")),
    );
}

fn baseline(args: BaselineArgs) -> CmdResult {
    let mut pops = vec![args.pop];
    pops.extend(args.compare_pop);
    let mut reports = Vec::new();
    for pop in pops {
        let params = BaselineParams {
            problem: args.problem.def(),
            population_size: pop,
            runs: args.runs,
            max_evaluations: args.max_evaluations,
            seed: args.seed,
        };
        let report = run_baseline_with(&params, |r| {
            tracing::info!(run = r.run, solved = r.solved, evaluations = r.evaluations, "run finished")
        })?;
        print_baseline(&report);
        reports.push(report);
    }
    if let Some(path) = &args.out {
        write_json(path, &reports)?;
    }
    if let Some(path) = &args.csv {
        let rows: Vec<_> = reports.iter().flat_map(|r| r.per_run_records.iter().cloned()).collect();
        poolevo::harness::write_records_csv(path, &rows)?;
    }
    if !args.assert {
        return Ok(true);
    }
    let mut ok = reports[0].success_rate >= args.min_success_rate;
    if let Some(other) = reports.get(1) {
        ok &= other.success_rate < reports[0].success_rate;
    }
    Ok(ok)
}

fn swarm(args: SwarmArgs) -> CmdResult {
    let mut scenario = SwarmScenario::new(args.problem.def(), args.clients, args.seed);
    scenario.client.island_count = args.islands;
    apply_island(&args.island, &args.problem, &mut scenario.client);
    scenario.duration_limit_ms = (args.duration_secs * 1000.0) as u64;
    scenario.solution_target = args.solutions;
    scenario.server_kill_after_ms = args.kill_server_after_ms;
    scenario.churn = ChurnModel {
        join_jitter_ms: args.join_jitter_ms,
        mean_session_ms: args.mean_session_ms,
        rejoin_probability: args.rejoin_prob,
        kill_all_after_ms: args.kill_clients_after_ms,
    };
    let report = run_swarm(&scenario)?;
    println!(
        "{} server solutions ({} client-side), first after {}, {} sessions, {} puts",
        report.solutions,
        report.client_solutions,
        report.time_to_first_solution_seconds.map_or("-".into(), |t| format!("{t:.3} s")),
        report.per_client.len(),
        report.server_stats.puts,
    );
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(!args.assert || report.solutions >= args.solutions)
}

fn time(args: TimeArgs) -> CmdResult {
    let spec = make_f15_spec(args.dimension, args.group_size, args.spec_seed, DEFAULT_BOUNDS)?;
    let report = time_f15(&spec, args.evaluations, args.seed)?;
    println!("{}", report.historical_context());
    println!("environment: {}", report.environment);
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(!args.assert || (report.total_milliseconds > 0.0 && report.all_finite))
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => serve(a),
        Command::Client(a) => client(a),
        Command::Baseline(a) => baseline(a),
        Command::Swarm(a) => swarm(a),
        Command::TimeF15(a) => time(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("assertion failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
