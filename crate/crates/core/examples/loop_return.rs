//! The loop-return procedure: the counter J climbs on sleeps and falls when
//! a walk wakes an earlier particle; it ends when every site of A sleeps.

use arw::engine::InstructionField;
use arw::lattice::{SiteSet, Topology};
use arw::strategies::{greedy_order, loop_return_procedure};

fn main() -> arw::Result<()> {
    let t = Topology::torus(10, 1)?;
    let a = SiteSet::from_sites(10, [0, 2, 3, 7]);
    let order = greedy_order(&a, &t)?;
    println!("order {:?}, gaps {:?}", order.sites, order.gaps);
    for seed in 0..5 {
        let f = InstructionField::sleep_free_outside(seed, 2, 0.5, a.clone())?;
        let run = loop_return_procedure(&t, &order, &f, 10_000_000)?;
        println!(
            "seed {seed}: T = {:4}, ‖m‖_A = {:4}, J path starts {:?}",
            run.steps,
            run.topplings_on_a,
            &run.trajectory[..run.trajectory.len().min(12)]
        );
    }
    Ok(())
}
