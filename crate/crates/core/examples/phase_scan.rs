//! Heuristic phase labels over a small (μ, λ) grid.

use arw::experiments::{phase_scan, ExperimentSpec, Kind};

fn main() -> arw::Result<()> {
    let mut spec = ExperimentSpec::new(Kind::PhaseScan);
    spec.n = vec![6, 12, 24];
    spec.mu = vec![0.1, 0.4, 0.9];
    spec.lambda = vec![0.1, 1.0];
    spec.replicas = 15;
    spec.cap = 2_000_000;
    for r in phase_scan(&spec)? {
        if r.n == 24 {
            println!(
                "μ = {:.1}, λ = {:.1}: per-site median {:10.1}, {}",
                r.mu, r.lambda, r.median_per_site, r.label
            );
        }
    }
    Ok(())
}
