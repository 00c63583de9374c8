//! The instruction field is a pure function of (seed, site, index): reading
//! it twice, or in any order, gives the same instruction. Inserting sleeps
//! into a sleep-free field produces geometric runs with mean λ.

use arw::engine::{couple_insert_sleeps, Instruction, InstructionField};
use arw::lattice::SiteSet;

fn main() -> arw::Result<()> {
    let f = InstructionField::standard(42, 2, 1.0)?;
    let first: Vec<_> = (0..8).map(|j| f.instruction(3, j)).collect();
    let backwards: Vec<_> = (0..8).rev().map(|j| f.instruction(3, j)).collect();
    assert!(first.iter().eq(backwards.iter().rev()));
    println!("site 3: {first:?}");

    let sleeps = (0..100_000u64).filter(|&j| f.instruction(0, j) == Some(Instruction::Sleep)).count();
    println!("sleep frequency at λ = 1: {:.4}", sleeps as f64 / 1e5);

    let lambda = 2.0;
    let base = InstructionField::sleep_free_outside(42, 2, lambda, SiteSet::from_sites(10, [4]))?;
    let coupled = couple_insert_sleeps(&base, lambda)?;
    let mean = (0..100_000u64).map(|i| coupled.inserted_run(0, i)).sum::<u64>() as f64 / 1e5;
    println!("mean inserted run at λ = {lambda}: {mean:.3}");
    Ok(())
}
