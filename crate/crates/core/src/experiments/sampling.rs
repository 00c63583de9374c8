use rand_distr::{Distribution, Poisson};

use crate::engine::Configuration;
use crate::error::{ArwError, Result};
use crate::lattice::Topology;
use crate::rng::{self, derive};

/// Sub-stream keys of a replica seed.
pub const FIELD_STREAM: u64 = 1;
pub const INITIAL_STREAM: u64 = 2;
pub const CLOCK_STREAM: u64 = 3;

/// Seed of replica `r` at grid point `point` of a scan.
pub fn replica_seed(master: u64, point: u64, r: u64) -> u64 {
    derive(derive(master, point), r)
}

/// I.i.d. Poisson(μ) active particles per site, from
/// `rng::stream(seed, INITIAL_STREAM)`. `μ = 0` gives the empty
/// configuration.
pub fn sample_initial(topo: &Topology, mu: f64, seed: u64) -> Result<Configuration> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(ArwError::param(format!("density μ={mu} must be finite and ≥ 0")));
    }
    if mu == 0.0 {
        return Ok(Configuration::empty(topo.volume()));
    }
    let poisson = Poisson::new(mu).map_err(|e| ArwError::param(e.to_string()))?;
    let mut r = rng::stream(seed, INITIAL_STREAM);
    Ok(Configuration::from_counts(
        (0..topo.volume()).map(|_| poisson.sample(&mut r) as u32),
    ))
}
