//! Three toppling orders, one outcome: the final configuration and the
//! odometer do not depend on which unstable site is toppled next.

use arw::engine::{stabilize, InstructionField, Policy};
use arw::experiments::sample_initial;
use arw::lattice::Topology;

fn main() -> arw::Result<()> {
    let t = Topology::torus(8, 2)?;
    let field = InstructionField::standard(7, t.degree(), 0.5)?;
    let eta = sample_initial(&t, 0.6, 7)?;
    println!("{} particles on a {}x{} torus", eta.total_particles(), t.n(), t.n());

    let mut reference = None;
    for policy in [Policy::Fifo, Policy::LowestIndex, Policy::UniformRandom { seed: 99 }] {
        let out = stabilize(&t, &field, eta.clone(), &t.all_sites(), policy, 100_000_000)?;
        println!("{policy:?}: {} topplings, stabilized = {}", out.topplings, out.stabilized());
        match &reference {
            None => reference = Some(out),
            Some(r) => assert!(r.config == out.config && r.odometer == out.odometer),
        }
    }
    println!("all orders agree");
    Ok(())
}
