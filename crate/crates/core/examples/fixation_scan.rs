//! Median fixation effort on tori of growing size, in the fast regime.

use arw::experiments::{fixation_scan, ExperimentSpec, Kind};

fn main() -> arw::Result<()> {
    let mut spec = ExperimentSpec::new(Kind::FixationScan);
    spec.n = vec![8, 16, 32, 64];
    spec.mu = vec![0.2];
    spec.lambda = vec![1.0];
    spec.replicas = 40;
    spec.cap = 10_000_000;
    let scan = fixation_scan(&spec)?;
    for p in &scan.summary.points {
        println!(
            "n = {:3}: median topplings {:8.0}, median time {:7.2}, censored {}",
            p.n, p.topplings.median, p.fixation_time.median, p.censored
        );
    }
    if let Some(fit) = &scan.summary.fit {
        println!("ln median vs n: slope {:.4}, R² {:.3}", fit.slope, fit.r_squared);
    }
    Ok(())
}
