//! Experiment drivers behind the `baseline`, `swarm` and `time-f15`
//! subcommands. Every report embeds the parameters and seeds that produced it.

mod baseline;
mod swarm;
mod timing;

pub use baseline::{run_baseline, run_baseline_with, run_seed, write_records_csv, BaselineParams, BaselineReport, RunRecord};
pub use swarm::{run_swarm, ChurnModel, ClientSession, SwarmReport, SwarmScenario};
pub use timing::{environment_note, time_f15, TimingReport, DEFAULT_TIMED_EVALUATIONS, HISTORICAL_TIMINGS_MS};

use crate::error::Result;

/// Median of a non-empty sample; the mean of the two middle values for even
/// sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Writes a report as pretty JSON.
pub fn write_json<T: serde::Serialize>(path: &std::path::Path, report: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
