//! Spreading a pile of particles so that each site of A holds exactly one.

use arw::engine::{Configuration, InstructionField};
use arw::lattice::{SiteSet, Topology};
use arw::strategies::spread_to_singles;

fn main() -> arw::Result<()> {
    let t = Topology::torus(12, 1)?;
    let a = SiteSet::from_sites(12, [1, 4, 5, 9]);
    let mut counts = vec![0u32; 12];
    counts[0] = 4;
    let field = InstructionField::sleep_free_outside(5, 2, 1.0, a.clone())?;
    let out = spread_to_singles(&t, &field, Configuration::from_counts(counts), &a, 1_000_000)?;
    let occupied: Vec<_> = (0..12).filter(|&x| out.config.occupation(x) > 0).collect();
    println!("occupied after spreading: {occupied:?} ({} topplings)", out.topplings);
    Ok(())
}
