use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::objective::F15Spec;
use crate::rng::Mt64;

pub const DEFAULT_TIMED_EVALUATIONS: u64 = 10_000;

/// Published times for 10,000 evaluations at D = 1000, m = 50 on 2015
/// hardware. Shown next to our figure, never compared against it.
pub const HISTORICAL_TIMINGS_MS: [(&str, f64); 3] =
    [("Matlab", 935.0), ("Java", 991.0), ("JavaScript, one web worker", 1238.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TimingReport {
    pub dimension: usize,
    pub group_size: usize,
    pub spec_seed: u64,
    pub sample_seed: u64,
    pub evaluations: u64,
    pub total_milliseconds: f64,
    pub per_evaluation_microseconds: f64,
    pub value_sum: f64,
    pub min_value: f64,
    pub all_finite: bool,
    pub environment: String,
}

impl TimingReport {
    pub fn historical_context(&self) -> String {
        let mut s = format!(
            "{} evaluations of D={}, m={}: {:.1} ms here ({:.2} us each)",
            self.evaluations, self.dimension, self.group_size, self.total_milliseconds, self.per_evaluation_microseconds
        );
        s.push_str("; historical 10k-evaluation figures, for context only:");
        for (who, ms) in HISTORICAL_TIMINGS_MS {
            s.push_str(&format!(" {who} {ms} ms;"));
        }
        s.pop();
        s
    }
}

pub fn environment_note() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let build = if cfg!(debug_assertions) { "debug" } else { "release" };
    format!("{}-{}, {cpus} logical cpus, {build} build", std::env::consts::OS, std::env::consts::ARCH)
}

/// Evaluates `spec` on `evaluations` uniform random points drawn from
/// `sample_seed`. Only the evaluation calls are timed.
pub fn time_f15(spec: &F15Spec, evaluations: u64, sample_seed: u64) -> Result<TimingReport> {
    if evaluations == 0 {
        return invalid("timing needs at least one evaluation");
    }
    let (lo, hi) = spec.bounds();
    let mut rng = Mt64::new(sample_seed);
    let mut x = vec![0.0; spec.dimension()];
    let mut elapsed = Duration::ZERO;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut all_finite = true;
    for _ in 0..evaluations {
        for xi in x.iter_mut() {
            *xi = rng.uniform_in(lo, hi);
        }
        let t = Instant::now();
        let v = spec.evaluate_unchecked(&x);
        elapsed += t.elapsed();
        all_finite &= v.is_finite();
        sum += v;
        min = min.min(v);
    }
    let total_ms = (elapsed.as_secs_f64() * 1e3).max(f64::MIN_POSITIVE);
    Ok(TimingReport {
        dimension: spec.dimension(),
        group_size: spec.group_size(),
        spec_seed: spec.seed(),
        sample_seed,
        evaluations,
        total_milliseconds: total_ms,
        per_evaluation_microseconds: total_ms * 1e3 / evaluations as f64,
        value_sum: sum,
        min_value: min,
        all_finite,
        environment: environment_note(),
    })
}
