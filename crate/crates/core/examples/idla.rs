//! IDLA started from a random shell: how often does the aggregate reach
//! the origin, as the density of the shell grows?

use arw::experiments::{idla_replica, idla_torus_side, wilson_interval};

fn main() -> arw::Result<()> {
    let (d, radius) = (2, 6.0);
    let replicas = 200;
    for beta in [4.0, 8.0, 9.0, 10.0] {
        let mut hits = 0;
        let mut particles = 0;
        for seed in 0..replicas {
            let r = idla_replica(d, radius, beta, seed, 100_000_000)?;
            hits += r.origin_occupied as u64;
            particles = r.particles;
        }
        let (lo, hi) = wilson_interval(hits, replicas, 0.95);
        println!(
            "β = {beta}: {particles:3} particles (torus side {}), origin occupied {hits:3}/{replicas}, 95% CI [{lo:.3}, {hi:.3}]",
            idla_torus_side(radius, particles)
        );
    }
    Ok(())
}
