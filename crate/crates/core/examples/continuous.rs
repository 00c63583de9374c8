//! Continuous-time dynamics from one configuration: the fixation time, and
//! the same odometer as discrete stabilization with the same field.

use arw::engine::{stabilize, InstructionField, Policy};
use arw::experiments::{sample_initial, simulate_continuous};
use arw::lattice::Topology;

fn main() -> arw::Result<()> {
    let t = Topology::torus(32, 1)?;
    let lambda = 1.0;
    let field = InstructionField::standard(11, 2, lambda)?;
    let eta = sample_initial(&t, 0.4, 11)?;
    let cont = simulate_continuous(&t, &field, eta.clone(), lambda, f64::INFINITY, 100_000_000, 12)?;
    println!(
        "{:?} at t = {:.3} after {} topplings ({} clock rings)",
        cont.status, cont.elapsed, cont.topplings, cont.events
    );
    let disc = stabilize(&t, &field, eta, &t.all_sites(), Policy::Fifo, 100_000_000)?;
    println!("discrete odometer matches: {}", disc.odometer == cont.odometer);
    Ok(())
}
