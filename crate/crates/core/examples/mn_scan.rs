//! Density of particles killed at the boundary of open boxes.

use arw::experiments::{mn_scan, ExperimentSpec, Kind};

fn main() -> arw::Result<()> {
    for mu in [0.05, 0.8] {
        let mut spec = ExperimentSpec::new(Kind::MnScan);
        spec.n = vec![4, 8, 16, 32];
        spec.mu = vec![mu];
        spec.lambda = vec![0.5];
        spec.replicas = 100;
        spec.cap = 10_000_000;
        println!("μ = {mu}");
        for p in mn_scan(&spec)?.points {
            println!("  n = {:2}: M/|V| = {:.4} ± {:.4}", p.n, p.density, p.stderr);
        }
    }
    Ok(())
}
