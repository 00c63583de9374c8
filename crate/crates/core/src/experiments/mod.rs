//! Continuous-time dynamics, Monte Carlo campaigns and their output.
//!
//! Every random quantity of a replica is derived from its seed
//! `derive(derive(master, grid point), replica)`, so results do not depend
//! on the number of worker threads.

mod continuous;
mod sampling;
mod scans;
mod spec;
mod stats;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{ArwError, Result};

pub use continuous::{simulate_continuous, ContinuousOutcome, ContinuousStatus};
pub use sampling::{replica_seed, sample_initial, CLOCK_STREAM, FIELD_STREAM, INITIAL_STREAM};
pub use scans::{
    chain_bound, execute, fan_out, fixation_replica, fixation_scan, idla_fluctuation, idla_replica, idla_torus_side,
    mn_scan, phase_scan, random_subset, shell_points, stabilize_replica, staged_replica, staged_scan, to_csv,
    ChainBoundRecord, FixationPoint, FixationRecord, FixationScan, FixationSummary, IdlaRecord, IdlaSummary,
    MnPoint, MnRecord, MnScan, PhaseRecord, Record, ReplicaResult, ScanResult, StagedRecord, StagedSummary,
    DEFAULT_HORIZONS, DEFAULT_IDLA_BETA, PHASE_GROWTH_THRESHOLD,
};
pub use spec::{ExperimentSpec, Format, Kind, DEFAULT_SCAN_CAP};
pub use stats::{linear_fit, mean_and_stderr, quantiles, wilson_interval, LinearFit, Quantiles};

pub const VERSION: &str = concat!("arw-", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    spec: &'a ExperimentSpec,
    wall_time_seconds: f64,
    files: Vec<String>,
}

/// Files produced by [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub result: ScanResult,
    pub files: Vec<PathBuf>,
}

fn io_error(path: &Path, source: std::io::Error) -> ArwError {
    ArwError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs `spec` and, if it names an output directory, writes
/// `<kind>.csv` (or `.json`), `<kind>.summary.json` when the kind has one,
/// and `manifest.json`. Nothing is written unless the whole computation
/// succeeded; on a write failure the files already written are removed.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    let started = Instant::now();
    let result = execute(spec)?;
    let Some(dir) = &spec.out else {
        return Ok(RunOutput {
            result,
            files: Vec::new(),
        });
    };
    let kind = spec.kind.name();
    let mut contents = vec![match spec.format {
        Format::Csv => (dir.join(format!("{kind}.csv")), result.csv()),
        Format::Json => (dir.join(format!("{kind}.json")), result.rows_json()?),
    }];
    if let Some(summary) = result.summary_json()? {
        contents.push((dir.join(format!("{kind}.summary.json")), summary));
    }
    let manifest_path = dir.join("manifest.json");
    let manifest = Manifest {
        version: VERSION,
        spec,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: contents
            .iter()
            .map(|(p, _)| p.display().to_string())
            .collect(),
    };
    contents.push((manifest_path, serde_json::to_string_pretty(&manifest)?));

    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut written = Vec::new();
    for (path, text) in contents {
        if let Err(e) = fs::write(&path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(io_error(&path, e));
        }
        written.push(path);
    }
    Ok(RunOutput {
        result,
        files: written,
    })
}
