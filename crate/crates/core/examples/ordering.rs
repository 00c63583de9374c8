//! Greedy ordering of a random subset and the product of its gaps.

use arw::experiments::random_subset;
use arw::lattice::Topology;
use arw::strategies::{greedy_order, product_bound_check};

fn main() -> arw::Result<()> {
    let t = Topology::torus(16, 2)?;
    for mu in [0.05, 0.2, 0.5] {
        let a = random_subset(&t, mu, 3);
        let o = greedy_order(&a, &t)?;
        let check = product_bound_check(&o, &t)?;
        println!(
            "μ = {mu}: |A| = {:3}, largest gap {:2}, ln ∏ℓ = {:8.2} ≤ {:.0}: {}",
            o.len(),
            o.gaps.iter().max().unwrap_or(&0),
            check.log_product,
            check.log_bound,
            check.satisfied
        );
    }
    Ok(())
}
