//! The reduced birth–death chain on `{1, ..., k+1}` and the electrical
//! quantities feeding it.
//!
//! Hitting probabilities come from effective resistances: with every edge
//! of resistance `2d` (so each site has total conductance 1),
//! `P_x(T_y < T_x^+) = 1/R(x, y)`. `R` is read off the potential of a unit
//! current injected at `x` and extracted at the grounded site `y`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{ArwError, Result};
use crate::lattice::{Neighbor, Topology};
use crate::rng;
use crate::strategies::OrderedSet;

/// Lattices up to this many sites use a dense Cholesky factorization;
/// larger ones a matrix-free conjugate-gradient iteration.
pub const DENSE_LIMIT: usize = 4096;

/// Largest acceptable `‖L v - e_x‖_∞` for a potential.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// The Laplacian of the torus with conductance `1/(2d)` per edge,
/// restricted to the complement of a grounded site.
pub struct GroundedLaplacian<'a> {
    topo: &'a Topology,
    ground: usize,
    dense: Option<Cholesky<f64, Dyn>>,
}

#[derive(Clone, Debug)]
pub struct Potential {
    /// Voltage per site, zero at the ground.
    pub voltage: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl<'a> GroundedLaplacian<'a> {
    pub fn new(topo: &'a Topology, ground: usize) -> Result<Self> {
        if !topo.is_torus() {
            return Err(ArwError::param("hitting probabilities are computed on tori"));
        }
        topo.check(ground)?;
        let mut lap = GroundedLaplacian {
            topo,
            ground,
            dense: None,
        };
        if topo.volume() <= DENSE_LIMIT {
            let m = topo.volume() - 1;
            let mut a = DMatrix::<f64>::zeros(m, m);
            let w = 1.0 / topo.degree() as f64;
            for x in (0..topo.volume()).filter(|&x| x != ground) {
                let i = lap.index(x);
                for dir in 0..topo.degree() {
                    let Neighbor::Site(z) = topo.step(x, dir) else { continue };
                    if z == x {
                        continue;
                    }
                    a[(i, i)] += w;
                    if z != ground {
                        a[(i, lap.index(z))] -= w;
                    }
                }
            }
            lap.dense = Some(a.cholesky().ok_or(ArwError::Solver {
                residual: f64::NAN,
                iterations: 0,
            })?);
        }
        Ok(lap)
    }

    #[inline]
    fn index(&self, x: usize) -> usize {
        if x < self.ground {
            x
        } else {
            x - 1
        }
    }

    /// `(L v)_x = Σ_z (v_x - v_z) / (2d)` over all sites, `v_ground = 0`.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let w = 1.0 / self.topo.degree() as f64;
        for x in 0..self.topo.volume() {
            let mut acc = 0.0;
            for dir in 0..self.topo.degree() {
                if let Neighbor::Site(z) = self.topo.step(x, dir) {
                    acc += v[x] - v[z];
                }
            }
            out[x] = if x == self.ground { 0.0 } else { acc * w };
        }
    }

    fn residual(&self, v: &[f64], source: usize) -> f64 {
        let mut lv = vec![0.0; v.len()];
        self.apply(v, &mut lv);
        lv.iter()
            .enumerate()
            .filter(|&(x, _)| x != self.ground)
            .map(|(x, r)| (r - if x == source { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// Potential of a unit current from `source` to the ground.
    pub fn potential(&self, source: usize) -> Result<Potential> {
        self.topo.check(source)?;
        if source == self.ground {
            return Err(ArwError::param("source and ground coincide"));
        }
        let volume = self.topo.volume();
        let (voltage, iterations) = match &self.dense {
            Some(chol) => {
                let mut b = DVector::<f64>::zeros(volume - 1);
                b[self.index(source)] = 1.0;
                let sol = chol.solve(&b);
                let mut v = vec![0.0; volume];
                for x in (0..volume).filter(|&x| x != self.ground) {
                    v[x] = sol[self.index(x)];
                }
                (v, 1)
            }
            None => self.conjugate_gradient(source)?,
        };
        let residual = self.residual(&voltage, source);
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(ArwError::Solver { residual, iterations });
        }
        Ok(Potential {
            voltage,
            residual,
            iterations,
        })
    }

    fn conjugate_gradient(&self, source: usize) -> Result<(Vec<f64>, usize)> {
        let volume = self.topo.volume();
        let max_iter = 20 * volume + 1000;
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut v = vec![0.0; volume];
        let mut r = vec![0.0; volume];
        r[source] = 1.0;
        let mut p = r.clone();
        let mut ap = vec![0.0; volume];
        let mut rr = dot(&r, &r);
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for x in 0..volume {
                v[x] += alpha * p[x];
                r[x] -= alpha * ap[x];
            }
            let next = dot(&r, &r);
            if next.sqrt() < 1e-13 {
                return Ok((v, it));
            }
            let beta = next / rr;
            rr = next;
            for x in 0..volume {
                p[x] = r[x] + beta * p[x];
            }
        }
        Err(ArwError::Solver {
            residual: rr.sqrt(),
            iterations: max_iter,
        })
    }

    /// `R(source, ground)`, the source voltage of a unit current.
    pub fn resistance(&self, source: usize) -> Result<f64> {
        let pot = self.potential(source)?;
        Ok(pot.voltage[source])
    }
}

/// `P_x(T_y < T_x^+) = 1/R(x, y)` for the simple random walk on a torus.
pub fn hitting_prob_exact(topo: &Topology, x: usize, y: usize) -> Result<f64> {
    if x == y {
        return Err(ArwError::param("hitting probability needs x ≠ y"));
    }
    Ok(1.0 / GroundedLaplacian::new(topo, y)?.resistance(x)?)
}

/// `P_x(T_y < T_x^+)` for every `x ≠ y` (entry `y` is `NaN`), with the
/// largest residual seen.
pub fn hitting_probs_to(topo: &Topology, y: usize) -> Result<(Vec<f64>, f64)> {
    let lap = GroundedLaplacian::new(topo, y)?;
    let mut probs = vec![f64::NAN; topo.volume()];
    let mut worst = 0.0f64;
    for x in (0..topo.volume()).filter(|&x| x != y) {
        let pot = lap.potential(x)?;
        worst = worst.max(pot.residual);
        probs[x] = 1.0 / pot.voltage[x];
    }
    Ok((probs, worst))
}

/// Birth–death chain on `{1, ..., k+1}`: from `j ≤ k` up with probability
/// `λ/(1+λ)`, down with `q_j/(1+λ)` (none from 1), otherwise stay; `k+1`
/// absorbs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedChain {
    pub k: usize,
    pub lambda: f64,
    /// `q_2, ..., q_k`.
    pub q: Vec<f64>,
}

impl ReducedChain {
    pub fn new(lambda: f64, q: Vec<f64>) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(ArwError::param(format!("λ={lambda} must be finite and > 0")));
        }
        if let Some(bad) = q.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
            return Err(ArwError::param(format!("hitting probability {bad} outside (0, 1]")));
        }
        Ok(ReducedChain {
            k: q.len() + 1,
            lambda,
            q,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ReducedChain = serde_json::from_str(text)?;
        if raw.k != raw.q.len() + 1 {
            return Err(ArwError::Parse(format!("k={} but {} hitting probabilities", raw.k, raw.q.len())));
        }
        Self::new(raw.lambda, raw.q)
    }

    /// `q_j` for `2 ≤ j ≤ k`.
    pub fn q(&self, j: usize) -> f64 {
        self.q[j - 2]
    }

    pub fn p_up(&self) -> f64 {
        self.lambda / (1.0 + self.lambda)
    }

    pub fn p_down(&self, j: usize) -> f64 {
        if j == 1 {
            0.0
        } else {
            self.q(j) / (1.0 + self.lambda)
        }
    }

    pub fn p_stay(&self, j: usize) -> f64 {
        if j == 1 {
            1.0 / (1.0 + self.lambda)
        } else {
            (1.0 - self.q(j)) / (1.0 + self.lambda)
        }
    }

    /// Largest `|p_up + p_down + p_stay - 1|` over the transient states.
    pub fn row_sum_error(&self) -> f64 {
        (1..=self.k)
            .map(|j| (self.p_up() + self.p_down(j) + self.p_stay(j) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// The chain of the loop procedure for `x_1, ..., x_k` on a torus:
/// `q_j = P_{x_j}(T_{x_{j-1}} < T^+_{x_j})`.
pub fn build_chain(ordered: &OrderedSet, topo: &Topology, lambda: f64) -> Result<ReducedChain> {
    if ordered.is_empty() {
        return Err(ArwError::param("ordered set is empty"));
    }
    let q = ordered
        .sites
        .windows(2)
        .map(|w| hitting_prob_exact(topo, w[1], w[0]))
        .collect::<Result<Vec<_>>>()?;
    ReducedChain::new(lambda, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityMeasure {
    /// `ln ν(1), ..., ln ν(k+1)`, with `ν(1) = 1`.
    pub log_nu: Vec<f64>,
    /// Relative detailed-balance residual per edge `(i, i+1)`.
    pub residuals: Vec<f64>,
    /// `ln(λ^{k-1} ∏_{j=1}^{k-1} 1/q_{j+1})`.
    pub closed_form_log: f64,
}

impl ReversibilityMeasure {
    pub fn log_nu_absorbing(&self) -> f64 {
        *self.log_nu.last().unwrap()
    }

    /// `|ν(k+1)/ν_closed(k+1) - 1|`.
    pub fn closed_form_error(&self) -> f64 {
        (self.log_nu_absorbing() - self.closed_form_log).exp_m1().abs()
    }
}

/// `ν(j) = ∏_{i<j} p(i, i+1)/p(i+1, i)` for the chain made reflecting at
/// `k+1` by `p(k+1, k) = λ/(1+λ)`. Carried in logs throughout.
pub fn nu_measure(chain: &ReducedChain) -> ReversibilityMeasure {
    let k = chain.k;
    let ln_up = chain.p_up().ln();
    let ln_down = |i: usize| {
        if i == k + 1 {
            ln_up
        } else {
            chain.p_down(i).ln()
        }
    };
    let mut log_nu = Vec::with_capacity(k + 1);
    log_nu.push(0.0);
    for i in 1..=k {
        let prev = log_nu[i - 1];
        log_nu.push(prev + ln_up - ln_down(i + 1));
    }
    let residuals = (1..=k)
        .map(|i| (log_nu[i - 1] + ln_up - (log_nu[i] + ln_down(i + 1))).exp_m1().abs())
        .collect();
    let closed_form_log =
        (k as f64 - 1.0) * chain.lambda.ln() - (2..=k).map(|j| chain.q(j).ln()).sum::<f64>();
    ReversibilityMeasure {
        log_nu,
        residuals,
        closed_form_log,
    }
}

/// Packaging of the bound in terms of the lattice: `n^d` sites at density
/// `μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeScale {
    pub n: usize,
    pub d: usize,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionBound {
    /// `min(1, M ν(k+1))`.
    pub bound: f64,
    /// `ln(M ν(k+1))`, `-∞` for `M = 0`.
    pub log_raw: f64,
    /// `ln[(M/(1 ∧ 2dλ)) (κ_d (2dλ)^μ)^{n^d}]`, when a scale is supplied.
    pub log_packaged: Option<f64>,
}

/// `P_1(T_{k+1} ≤ M) ≤ M ν(k+1)`.
pub fn absorption_bound(chain: &ReducedChain, m: u64, scale: Option<LatticeScale>) -> Result<AbsorptionBound> {
    let nu = nu_measure(chain);
    let log_raw = (m as f64).ln() + nu.log_nu_absorbing();
    let log_packaged = scale
        .map(|s| -> Result<f64> {
            let two_d_lambda = 2.0 * s.d as f64 * chain.lambda;
            let volume = (s.n as f64).powi(s.d as i32);
            Ok((m as f64).ln() - two_d_lambda.min(1.0).ln()
                + volume * (bounds::kappa(s.d)?.log + s.mu * two_d_lambda.ln()))
        })
        .transpose()?;
    Ok(AbsorptionBound {
        bound: log_raw.exp().min(1.0),
        log_raw,
        log_packaged,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbsorptionSamples {
    /// `T_{k+1}` per replica; censored replicas hold the first time past
    /// the cap, a lower bound.
    pub samples: Vec<u64>,
    pub censored: usize,
    pub cap: Option<u64>,
}

impl AbsorptionSamples {
    /// Empirical `P(T_{k+1} ≤ m)` with its standard error. Exact for `m`
    /// up to the cap.
    pub fn cdf(&self, m: u64) -> (f64, f64) {
        let n = self.samples.len() as f64;
        let hits = self.samples.iter().filter(|&&t| t <= m).count() as f64;
        let p = hits / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().map(|&t| t as f64).sum::<f64>() / self.samples.len() as f64
    }
}

/// Samples of the absorption time from state 1, replica `i` seeded by
/// `derive(seed, i)`. Holding times are drawn in one geometric step.
/// Runs longer than `cap` are stopped and reported as censored.
pub fn simulate_absorption(
    chain: &ReducedChain,
    seed: u64,
    replicas: usize,
    cap: Option<u64>,
) -> Result<AbsorptionSamples> {
    if replicas == 0 {
        return Err(ArwError::param("replicas must be at least 1"));
    }
    let k = chain.k;
    let leave: Vec<f64> = (0..=k).map(|j| if j == 0 { 0.0 } else { 1.0 - chain.p_stay(j) }).collect();
    let ln_stay: Vec<f64> = (0..=k).map(|j| if j == 0 { 0.0 } else { chain.p_stay(j).ln() }).collect();
    let p_up = chain.p_up();
    let limit = cap.unwrap_or(u64::MAX);
    let mut censored = 0;
    let samples = (0..replicas as u64)
        .map(|i| {
            let mut r = rng::stream(seed, i);
            let mut t = 0u64;
            let mut j = 1usize;
            while j <= k {
                // Steps until leaving j: geometric on {1, 2, ...}.
                let u: f64 = 1.0 - r.random::<f64>();
                let hold = if ln_stay[j] == f64::NEG_INFINITY {
                    1.0
                } else {
                    (u.ln() / ln_stay[j]).floor() + 1.0
                };
                t = t.saturating_add(if hold >= u64::MAX as f64 { u64::MAX } else { hold as u64 });
                if t > limit {
                    censored += 1;
                    return t;
                }
                if r.random::<f64>() * leave[j] < p_up {
                    j += 1;
                } else {
                    j -= 1;
                }
            }
            t
        })
        .collect();
    Ok(AbsorptionSamples {
        samples,
        censored,
        cap,
    })
}
