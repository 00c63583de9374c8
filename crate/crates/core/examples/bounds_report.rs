//! Constants of the explicit slow-phase condition.

use arw::bounds::{active_phase_condition, kappa, log_binomial_bound, report};

fn main() -> arw::Result<()> {
    for d in 1..=3 {
        let k = kappa(d)?;
        println!("d = {d}: ln κ = {:.4}, κ = {:?}", k.log, k.value);
    }
    for lambda in [1e-3, 1e-5, 1e-7] {
        let c = active_phase_condition(1, 0.5, lambda)?;
        println!("μ = 0.5, λ = {lambda:e}: margin {:+.4} → {}", c.margin, c.satisfied);
    }
    let b = log_binomial_bound(100, 0.5)?;
    println!("ln C(100, 50) = {:.4} ≤ {:.4}", b.exact, b.bound);
    println!("{}", serde_json::to_string_pretty(&report(1, 0.5, 1e-5, None, 0.1)?)?);
    Ok(())
}
