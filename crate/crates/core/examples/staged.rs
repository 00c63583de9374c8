//! The staged torus procedure on a sparse one-dimensional torus.

use arw::bounds::stage_params;
use arw::engine::InstructionField;
use arw::experiments::sample_initial;
use arw::lattice::{nested_boxes, Topology};
use arw::rng::derive;
use arw::strategies::staged_torus_procedure;

fn main() -> arw::Result<()> {
    let n = 20;
    let t = Topology::torus(n, 1)?;
    let p = stage_params(12.0, 1, 0.3, 1.0, 4.0)?;
    let boxes = nested_boxes(n, 1, p.a)?;
    println!("a = {:.4}, ε = {:.4}", p.a, p.epsilon);

    let mut successes = 0;
    for seed in 0..200 {
        let eta = sample_initial(&t, 0.3, seed)?;
        let f = InstructionField::standard(derive(seed, 1), 2, 1.0)?;
        let run = staged_torus_procedure(&t, eta, &f, &boxes, p.epsilon, 10_000_000)?;
        if run.report.success {
            successes += 1;
        } else if seed < 5 {
            let last = run.report.steps.last().unwrap();
            println!("seed {seed}: stopped at step {}", last.step);
        }
    }
    println!("{successes}/200 runs completed every step");
    Ok(())
}
