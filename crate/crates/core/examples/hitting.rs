//! Exact hitting probabilities on a small torus from effective resistance.

use arw::chain1d::hitting_prob_exact;
use arw::lattice::Topology;

fn main() -> arw::Result<()> {
    let t = Topology::torus(8, 2)?;
    let origin = 0;
    for y in [1, 2, 9, 18, 36] {
        let p = hitting_prob_exact(&t, origin, y)?;
        let dist = t.distance(origin, y)?;
        println!("distance {dist}: P(hit before return) = {p:.4}, 1/(4·dist) = {:.4}", 0.25 / dist as f64);
    }
    Ok(())
}
