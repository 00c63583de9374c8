//! Closed-form constants and inequalities.
//!
//! Everything is evaluated in the log domain. Strict inequalities are
//! decided with a slack of [`SLACK`]: a margin within `SLACK` of zero counts
//! as equality, hence as a failure of the strict inequality.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{ArwError, Result};

pub const SLACK: f64 = 1e-12;

/// Largest `m` used to calibrate the Stirling constant.
pub const STIRLING_CALIBRATION_MAX: u64 = 1_000_000;

/// Default IDLA density `β` for [`stage_params`].
pub const DEFAULT_BETA: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    /// `ln κ_d`.
    pub log: f64,
    /// `κ_d` itself, `None` once it overflows an `f64` (from `d = 3` on).
    pub value: Option<f64>,
}

/// `κ_d = 2 exp((2d²)^d / (1 - 2^{-d}))`.
pub fn kappa(d: usize) -> Result<Kappa> {
    if d == 0 {
        return Err(ArwError::param("dimension must be at least 1"));
    }
    let base = 2.0 * (d * d) as f64;
    let log = std::f64::consts::LN_2 + base.powi(d as i32) / (1.0 - 0.5f64.powi(d as i32));
    let value = log.exp();
    Ok(Kappa {
        log,
        value: value.is_finite().then_some(value),
    })
}

fn check_density(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(ArwError::param(format!("density μ={mu} must lie in (0, 1)")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ArwError::param(format!("{name}={v} must be finite and > 0")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCondition {
    /// `ln(κ_d (2dλ)^μ)`.
    pub lhs_log: f64,
    /// `ln(μ^μ (1-μ)^{1-μ})`.
    pub rhs_log: f64,
    /// `rhs_log - lhs_log`.
    pub margin: f64,
    pub satisfied: bool,
}

/// The sufficient condition `κ_d (2dλ)^μ < μ^μ (1-μ)^{1-μ}` for the slow
/// phase.
pub fn active_phase_condition(d: usize, mu: f64, lambda: f64) -> Result<PhaseCondition> {
    check_density(mu)?;
    check_positive("λ", lambda)?;
    let k = kappa(d)?;
    let lhs_log = k.log + mu * (2.0 * d as f64 * lambda).ln();
    let rhs_log = mu * mu.ln() + (1.0 - mu) * (1.0 - mu).ln();
    let margin = rhs_log - lhs_log;
    Ok(PhaseCondition {
        lhs_log,
        rhs_log,
        margin,
        satisfied: margin > SLACK,
    })
}

/// Half the log-margin of [`active_phase_condition`], so that
/// `κ_d (2dλ)^μ / (μ^μ (1-μ)^{1-μ}) = e^{-2c}`; `None` when the condition
/// fails.
pub fn admissible_c(d: usize, mu: f64, lambda: f64) -> Result<Option<f64>> {
    let cond = active_phase_condition(d, mu, lambda)?;
    Ok(cond.satisfied.then_some(cond.margin / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialBound {
    /// `ln C(m, ⌈μm⌉)`.
    pub exact: f64,
    /// `ln C(μ) - μm ln μ - (1-μ)m ln(1-μ) - ½ ln m`.
    pub bound: f64,
    /// The calibrated `ln C(μ)`.
    pub log_constant: f64,
}

fn ln_choose(m: u64, r: u64) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((m - r) as f64 + 1.0)
}

fn ceil_fraction(m: u64, mu: f64) -> u64 {
    ((mu * m as f64).ceil() as u64).min(m)
}

fn stirling_main(m: u64, mu: f64) -> f64 {
    let m_f = m as f64;
    -mu * m_f * mu.ln() - (1.0 - mu) * m_f * (1.0 - mu).ln() - 0.5 * m_f.ln()
}

fn exact_and_main(m: u64, mu: f64) -> (f64, f64) {
    (ln_choose(m, ceil_fraction(m, mu)), stirling_main(m, mu))
}

/// `ln C(μ)`: the supremum of `ln C(m, ⌈μm⌉) - main(m)` over
/// `1 ≤ m ≤ 10^6`, plus `1e-9` to absorb rounding in `ln C + main`.
/// Computed once per `μ` and cached.
pub fn stirling_constant(mu: f64) -> Result<f64> {
    check_density(mu)?;
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&c) = cache.lock().expect("cache poisoned").get(&mu.to_bits()) {
        return Ok(c);
    }
    let sup = (1..=STIRLING_CALIBRATION_MAX)
        .map(|m| {
            let (exact, main) = exact_and_main(m, mu);
            exact - main
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let c = sup + 1e-9;
    cache.lock().expect("cache poisoned").insert(mu.to_bits(), c);
    Ok(c)
}

/// `ln C(m, ⌈μm⌉)` against its Stirling-form upper bound.
pub fn log_binomial_bound(m: u64, mu: f64) -> Result<BinomialBound> {
    if m == 0 {
        return Err(ArwError::param("m must be at least 1"));
    }
    let log_constant = stirling_constant(mu)?;
    let (exact, main) = exact_and_main(m, mu);
    Ok(BinomialBound {
        exact,
        bound: log_constant + main,
        log_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub a: f64,
    pub epsilon: f64,
}

/// Box parameter `a` and escape fraction `ε` at 90% of their upper bounds
/// `c/(96dμ) ∧ c/(72d ln(1+1/λ)) ∧ 1/3` and `βa^d/4^d ∧ c/24`.
pub fn stage_params(c: f64, d: usize, mu: f64, lambda: f64, beta: f64) -> Result<StageParams> {
    check_positive("c", c)?;
    check_positive("μ", mu)?;
    check_positive("λ", lambda)?;
    check_positive("β", beta)?;
    if d == 0 {
        return Err(ArwError::param("dimension must be at least 1"));
    }
    let d_f = d as f64;
    let a_max = (c / (96.0 * d_f * mu))
        .min(c / (72.0 * d_f * (1.0 + 1.0 / lambda).ln()))
        .min(1.0 / 3.0);
    let a = 0.9 * a_max;
    let eps_max = (beta * (a / 4.0).powi(d as i32)).min(c / 24.0);
    Ok(StageParams {
        a,
        epsilon: 0.9 * eps_max,
    })
}

/// The `bounds` report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub d: usize,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: Option<f64>,
    pub log_kappa: f64,
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub satisfied: bool,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Evaluates every constant for `(d, μ, λ)`. `c` defaults to
/// [`admissible_c`]; `a` and `ε` are derived from it when available.
pub fn report(d: usize, mu: f64, lambda: f64, c: Option<f64>, beta: f64) -> Result<BoundsReport> {
    let k = kappa(d)?;
    let cond = active_phase_condition(d, mu, lambda)?;
    let c = match c {
        Some(c) => Some(c),
        None => admissible_c(d, mu, lambda)?,
    };
    let stage = c.map(|c| stage_params(c, d, mu, lambda, beta)).transpose()?;
    Ok(BoundsReport {
        d,
        mu,
        lambda,
        kappa: k.value,
        log_kappa: k.log,
        lhs_log: cond.lhs_log,
        rhs_log: cond.rhs_log,
        satisfied: cond.satisfied,
        c,
        a: stage.map(|s| s.a),
        epsilon: stage.map(|s| s.epsilon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_values() {
        let k1 = kappa(1).unwrap();
        assert!((k1.value.unwrap() / (2.0 * 4f64.exp()) - 1.0).abs() < 1e-12);
        let k2 = kappa(2).unwrap();
        assert!((k2.log - (2f64.ln() + 256.0 / 3.0)).abs() < 1e-12);
        assert!(kappa(3).unwrap().value.is_none());
        assert!(kappa(0).is_err());
    }

    #[test]
    fn phase_condition_pair() {
        let yes = active_phase_condition(1, 0.5, 1e-5).unwrap();
        assert!(yes.satisfied);
        assert!((yes.lhs_log.exp() - 0.4883).abs() < 1e-4);
        assert!((yes.margin - 0.023_594_781_085).abs() < 1e-9);
        let no = active_phase_condition(1, 0.5, 2e-5).unwrap();
        assert!(!no.satisfied);
        assert!((no.lhs_log.exp() - 0.6906).abs() < 1e-4);
    }

    #[test]
    fn c_is_half_the_margin() {
        let c = admissible_c(1, 0.5, 1e-5).unwrap().unwrap();
        assert!((c - 0.011_797_390_543).abs() < 1e-9);
        assert!(admissible_c(1, 0.5, 2e-5).unwrap().is_none());
    }

    #[test]
    fn small_binomials() {
        let b = log_binomial_bound(2, 0.5).unwrap();
        assert!((b.exact - 2f64.ln()).abs() < 1e-12);
        let b = log_binomial_bound(100, 0.5).unwrap();
        assert!((b.exact - 66.783_841_652).abs() < 1e-8);
        assert!(b.exact <= b.bound);
    }

    #[test]
    fn stage_parameter_arithmetic() {
        let p = stage_params(0.24, 1, 0.5, 1.0, 0.1).unwrap();
        let a = 0.9 * (0.24 / (72.0 * 2f64.ln()));
        assert!((p.a - a).abs() < 1e-15);
        assert!((p.a - 0.004328).abs() < 1e-6);
        assert!((p.epsilon - 0.9 * 0.1 * a / 4.0).abs() < 1e-15);
    }
}
