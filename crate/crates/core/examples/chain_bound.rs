//! The reduced chain of a greedy ordering: its absorption bound against
//! direct simulation.

use arw::chain1d::{absorption_bound, build_chain, nu_measure, simulate_absorption};
use arw::lattice::{SiteSet, Topology};
use arw::strategies::greedy_order;

fn main() -> arw::Result<()> {
    let t = Topology::torus(40, 1)?;
    let a = SiteSet::from_sites(40, [0, 3, 6, 9, 12]);
    let lambda = 0.05;
    let chain = build_chain(&greedy_order(&a, &t)?, &t, lambda)?;
    println!(
        "k = {}, row-sum error {:.1e}, ln ν(k+1) = {:.3}",
        chain.k,
        chain.row_sum_error(),
        nu_measure(&chain).log_nu_absorbing()
    );

    let samples = simulate_absorption(&chain, 9, 20_000, Some(10_000_000))?;
    for m in [10, 100, 1_000, 10_000, 100_000] {
        let bound = absorption_bound(&chain, m, None)?.bound;
        let (p, se) = samples.cdf(m);
        println!("M = {m:6}: bound {bound:.3e}, simulated {p:.4} ± {se:.4}");
    }
    Ok(())
}
