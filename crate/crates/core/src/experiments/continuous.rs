use rand_distr::weighted::WeightedTreeIndex;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::engine::{Arw, Configuration, InstructionField, Odometer, ToppleMode};
use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, Topology};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuousStatus {
    Fixated,
    TimedOut,
    CapExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousOutcome {
    /// `T_n`, the first time the configuration is stable.
    pub fixation_time: Option<f64>,
    /// Simulated time when the run stopped.
    pub elapsed: f64,
    pub topplings: u64,
    /// Clock rings, including the ones that found a sleeping particle.
    pub events: u64,
    pub killed: u64,
    pub config: Configuration,
    pub odometer: Odometer,
    pub status: ContinuousStatus,
}

/// Continuous-time dynamics: every particle carries a rate `1 + λ` clock;
/// a ring at an active site topples it, a ring at a sleeping particle does
/// nothing. Equivalently the total rate is `(1 + λ) · #particles` and the
/// site is chosen proportionally to its occupation.
///
/// The clock stream is `rng::stream(clock_seed, 0)`. Stops at fixation,
/// at time `t_max`, or after `cap` topplings.
pub fn simulate_continuous(
    topo: &Topology,
    field: &InstructionField,
    config: Configuration,
    lambda: f64,
    t_max: f64,
    cap: u64,
    clock_seed: u64,
) -> Result<ContinuousOutcome> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ArwError::param(format!("λ={lambda} must be finite and > 0")));
    }
    if let Some(own) = field.lambda() {
        if own != lambda {
            return Err(ArwError::param(format!("field has λ={own}, dynamics λ={lambda}")));
        }
    }
    if t_max.is_nan() || t_max < 0.0 {
        return Err(ArwError::param(format!("t_max={t_max} must be ≥ 0")));
    }
    let mut arw = Arw::new(topo, field, config)?;
    let weights: Vec<u64> = arw.config().states().map(|s| s.particles()).collect();
    let mut total: u64 = weights.iter().sum();
    let mut tree = WeightedTreeIndex::new(weights).map_err(|e| ArwError::param(e.to_string()))?;
    let mut flags: Vec<bool> = (0..topo.volume()).map(|x| arw.is_active(x)).collect();
    let mut active = flags.iter().filter(|&&f| f).count();
    let mut clock = rng::stream(clock_seed, 0);
    let mut time = 0.0f64;
    let mut topplings = 0u64;
    let mut events = 0u64;

    let status = loop {
        if active == 0 {
            break ContinuousStatus::Fixated;
        }
        if topplings >= cap {
            break ContinuousStatus::CapExceeded;
        }
        let rate = (1.0 + lambda) * total as f64;
        time += Exp::new(rate).expect("positive rate").sample(&mut clock);
        if time > t_max {
            time = t_max;
            break ContinuousStatus::TimedOut;
        }
        events += 1;
        let x = tree.sample(&mut clock);
        if !arw.is_active(x) {
            continue;
        }
        let done = arw.topple(x, ToppleMode::Legal)?;
        topplings += 1;
        let Some(target) = done.target else {
            if !arw.is_active(x) {
                flags[x] = false;
                active -= 1;
            }
            continue;
        };
        tree.update(x, arw.config().occupation(x))
            .map_err(|e| ArwError::param(e.to_string()))?;
        let y = match target {
            Neighbor::Site(y) => {
                tree.update(y, arw.config().occupation(y))
                    .map_err(|e| ArwError::param(e.to_string()))?;
                Some(y)
            }
            Neighbor::Exterior => {
                total -= 1;
                None
            }
        };
        for z in [Some(x), y].into_iter().flatten() {
            let now = arw.is_active(z);
            if now != flags[z] {
                flags[z] = now;
                if now {
                    active += 1;
                } else {
                    active -= 1;
                }
            }
        }
    };
    let fixation_time = (status == ContinuousStatus::Fixated).then_some(time);
    let killed = arw.killed();
    let (config, odometer, _) = arw.into_parts();
    Ok(ContinuousOutcome {
        fixation_time,
        elapsed: time,
        topplings,
        events,
        killed,
        config,
        odometer,
        status,
    })
}
