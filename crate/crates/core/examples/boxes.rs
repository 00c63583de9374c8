//! Nested boxes on a torus and their boundaries.

use arw::lattice::{boundaries, box_lambda, nested_boxes};

fn main() -> arw::Result<()> {
    let (inner, outer) = boundaries(2, 2);
    println!("side-2 box in d=2: {} points, inner boundary {}, outer boundary {}",
        box_lambda(2, 2).len(), inner.len(), outer.len());

    let family = nested_boxes(20, 2, 0.2)?;
    for (name, b) in ["whole", "medium", "small", "tiny"].iter().zip(&family.boxes) {
        println!("{name:>6}: {} sites", b.len());
    }
    Ok(())
}
