use rand::Rng;
use rayon::prelude::*;
use rayon::ThreadPoolBuilder;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, DEFAULT_BETA};
use crate::chain1d::{absorption_bound, build_chain, simulate_absorption};
use crate::engine::{stabilize, Configuration, InstructionField, Policy};
use crate::error::{ArwError, Result};
use crate::lattice::{nested_boxes, BoxFamily, SiteSet, Topology};
use crate::rng::{self, derive};
use crate::strategies::{greedy_order, idla_stabilize, staged_torus_procedure, StageReport};

use super::continuous::{simulate_continuous, ContinuousStatus};
use super::sampling::{replica_seed, sample_initial, CLOCK_STREAM, FIELD_STREAM, INITIAL_STREAM};
use super::spec::{ExperimentSpec, Kind};
use super::stats::{linear_fit, mean_and_stderr, quantiles, wilson_interval, LinearFit, Quantiles};

/// Maps `f` over `0..count` on `workers` threads (the global pool when
/// `None`), keeping input order.
pub fn fan_out<T, F>(count: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let job = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        None => job(),
        Some(w) => ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| ArwError::param(format!("thread pool: {e}")))?
            .install(job),
    }
}

/// A flat output row.
pub trait Record: Serialize {
    const HEADER: &'static str;
    fn csv_row(&self) -> String;
}

pub fn to_csv<R: Record>(rows: &[R]) -> String {
    let mut out = String::from(R::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Per-replica outcome shared by the scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaResult {
    pub seed: u64,
    /// `|η_0|`.
    pub particles: u64,
    /// `‖m‖`.
    pub topplings: u64,
    /// `T_n` of continuous-time runs; the elapsed time when not terminated.
    pub fixation_time: Option<f64>,
    /// `M_n` of box runs.
    pub killed: Option<u64>,
    pub stage: Option<StageReport>,
    pub terminated: bool,
}

fn standard_field(topo: &Topology, lambda: f64, seed: u64) -> Result<InstructionField> {
    InstructionField::standard(derive(seed, FIELD_STREAM), topo.degree(), lambda)
}

/// Continuous-time fixation run from a Poisson(μ) start.
pub fn fixation_replica(
    topo: &Topology,
    mu: f64,
    lambda: f64,
    seed: u64,
    cap: u64,
    t_max: Option<f64>,
) -> Result<ReplicaResult> {
    let eta0 = sample_initial(topo, mu, seed)?;
    let particles = eta0.total_particles();
    let field = standard_field(topo, lambda, seed)?;
    let out = simulate_continuous(
        topo,
        &field,
        eta0,
        lambda,
        t_max.unwrap_or(f64::INFINITY),
        cap,
        derive(seed, CLOCK_STREAM),
    )?;
    Ok(ReplicaResult {
        seed,
        particles,
        topplings: out.topplings,
        fixation_time: Some(out.elapsed),
        killed: (!topo.is_torus()).then_some(out.killed),
        stage: None,
        terminated: out.status == ContinuousStatus::Fixated,
    })
}

/// Discrete FIFO stabilization of the whole lattice from a Poisson(μ) start.
pub fn stabilize_replica(topo: &Topology, mu: f64, lambda: f64, seed: u64, cap: u64) -> Result<ReplicaResult> {
    let eta0 = sample_initial(topo, mu, seed)?;
    let particles = eta0.total_particles();
    let field = standard_field(topo, lambda, seed)?;
    let out = stabilize(topo, &field, eta0, &topo.all_sites(), Policy::Fifo, cap)?;
    Ok(ReplicaResult {
        seed,
        particles,
        topplings: out.topplings,
        fixation_time: None,
        killed: (!topo.is_torus()).then_some(out.killed),
        stage: None,
        terminated: out.stabilized(),
    })
}

pub fn staged_replica(
    topo: &Topology,
    boxes: &BoxFamily,
    epsilon: f64,
    mu: f64,
    lambda: f64,
    seed: u64,
    cap: u64,
) -> Result<ReplicaResult> {
    let eta0 = sample_initial(topo, mu, seed)?;
    let particles = eta0.total_particles();
    let field = standard_field(topo, lambda, seed)?;
    let run = staged_torus_procedure(topo, eta0, &field, boxes, epsilon, cap)?;
    Ok(ReplicaResult {
        seed,
        particles,
        topplings: run.report.total_topplings(),
        fixation_time: None,
        killed: None,
        terminated: run.report.success,
        stage: Some(run.report),
    })
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------- fixation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationRecord {
    pub d: usize,
    pub n: usize,
    pub mu: f64,
    pub lambda: f64,
    #[serde(flatten)]
    pub replica: ReplicaResult,
}

impl Record for FixationRecord {
    const HEADER: &'static str = "seed,d,n,mu,lambda,particles,topplings,fixation_time,terminated";

    fn csv_row(&self) -> String {
        let r = &self.replica;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            self.d,
            self.n,
            self.mu,
            self.lambda,
            r.particles,
            r.topplings,
            fmt_opt(r.fixation_time),
            r.terminated
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationPoint {
    pub n: usize,
    pub replicas: usize,
    pub censored: usize,
    pub topplings: Quantiles,
    pub fixation_time: Quantiles,
    /// Censored replicas enter at their cap, so the quantiles are lower
    /// bounds.
    pub lower_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationSummary {
    pub points: Vec<FixationPoint>,
    /// `ln(median topplings)` against `n^d`.
    pub fit: Option<LinearFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationScan {
    pub records: Vec<FixationRecord>,
    pub summary: FixationSummary,
}

fn grid_replicas(spec: &ExperimentSpec, points: usize) -> Vec<(usize, u64, u64)> {
    (0..points)
        .flat_map(|p| (0..spec.replicas as u64).map(move |r| (p, r, replica_seed(spec.seed, p as u64, r))))
        .collect()
}

pub fn fixation_scan(spec: &ExperimentSpec) -> Result<FixationScan> {
    let mu = spec.single("mu", &spec.mu)?;
    let lambda = spec.single("lambda", &spec.lambda)?;
    let tori = spec
        .n
        .iter()
        .map(|&n| Topology::torus(n, spec.d))
        .collect::<Result<Vec<_>>>()?;
    let jobs = grid_replicas(spec, tori.len());
    let records = fan_out(jobs.len(), spec.workers, |i| {
        let (p, _, seed) = jobs[i];
        Ok(FixationRecord {
            d: spec.d,
            n: spec.n[p],
            mu,
            lambda,
            replica: fixation_replica(&tori[p], mu, lambda, seed, spec.cap, spec.t_max)?,
        })
    })?;
    let points: Vec<FixationPoint> = records
        .chunks(spec.replicas)
        .zip(&spec.n)
        .map(|(chunk, &n)| {
            let censored = chunk.iter().filter(|r| !r.replica.terminated).count();
            let top: Vec<f64> = chunk.iter().map(|r| r.replica.topplings as f64).collect();
            let time: Vec<f64> = chunk.iter().map(|r| r.replica.fixation_time.unwrap_or(0.0)).collect();
            FixationPoint {
                n,
                replicas: chunk.len(),
                censored,
                topplings: quantiles(&top),
                fixation_time: quantiles(&time),
                lower_bound: censored > 0,
            }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).powi(spec.d as i32)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.topplings.median.ln()).collect();
    let fit = if ys.iter().all(|y| y.is_finite()) {
        linear_fit(&xs, &ys)
    } else {
        None
    };
    Ok(FixationScan {
        records,
        summary: FixationSummary { points, fit },
    })
}

// ---------------------------------------------------------------- M_n

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnRecord {
    pub d: usize,
    pub n: usize,
    pub mu: f64,
    pub lambda: f64,
    #[serde(flatten)]
    pub replica: ReplicaResult,
}

impl Record for MnRecord {
    const HEADER: &'static str = "seed,d,n,mu,lambda,particles,killed,topplings,terminated";

    fn csv_row(&self) -> String {
        let r = &self.replica;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            r.seed,
            self.d,
            self.n,
            self.mu,
            self.lambda,
            r.particles,
            fmt_opt(r.killed),
            r.topplings,
            r.terminated
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnPoint {
    pub n: usize,
    pub volume: usize,
    /// Mean of `M_n / |Λ_n|`.
    pub density: f64,
    pub stderr: f64,
    pub censored: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MnScan {
    pub records: Vec<MnRecord>,
    pub points: Vec<MnPoint>,
}

pub fn mn_scan(spec: &ExperimentSpec) -> Result<MnScan> {
    let mu = spec.single("mu", &spec.mu)?;
    let lambda = spec.single("lambda", &spec.lambda)?;
    let boxes = spec
        .n
        .iter()
        .map(|&n| Topology::open_box(n, spec.d))
        .collect::<Result<Vec<_>>>()?;
    let jobs = grid_replicas(spec, boxes.len());
    let records = fan_out(jobs.len(), spec.workers, |i| {
        let (p, _, seed) = jobs[i];
        Ok(MnRecord {
            d: spec.d,
            n: spec.n[p],
            mu,
            lambda,
            replica: stabilize_replica(&boxes[p], mu, lambda, seed, spec.cap)?,
        })
    })?;
    let points = records
        .chunks(spec.replicas)
        .zip(&boxes)
        .map(|(chunk, topo)| {
            let vol = topo.volume() as f64;
            let dens: Vec<f64> = chunk
                .iter()
                .map(|r| r.replica.killed.unwrap_or(0) as f64 / vol)
                .collect();
            let (density, stderr) = mean_and_stderr(&dens);
            MnPoint {
                n: topo.n(),
                volume: topo.volume(),
                density,
                stderr,
                censored: chunk.iter().filter(|r| !r.replica.terminated).count(),
            }
        })
        .collect();
    Ok(MnScan { records, points })
}

// ---------------------------------------------------------------- phase

/// Ratio of per-site median topplings between the largest and smallest
/// size above which a grid point is labelled slow.
pub const PHASE_GROWTH_THRESHOLD: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub mu: f64,
    pub lambda: f64,
    pub n: usize,
    pub median_topplings: f64,
    pub median_per_site: f64,
    pub censored: usize,
    pub label: String,
    /// Whether the explicit sufficient condition for the slow phase holds.
    pub condition_satisfied: bool,
}

impl Record for PhaseRecord {
    const HEADER: &'static str = "mu,lambda,n,median_topplings,median_per_site,censored,label,condition_satisfied";

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.mu,
            self.lambda,
            self.n,
            self.median_topplings,
            self.median_per_site,
            self.censored,
            self.label,
            self.condition_satisfied
        )
    }
}

/// Labels each `(μ, λ)` by how the per-site median toppling count grows
/// from the smallest size with a positive median to the largest: `slow (heuristic)` past
/// [`PHASE_GROWTH_THRESHOLD`] or when any replica hit the cap,
/// `fast (heuristic)` otherwise. A trend, not a phase boundary.
pub fn phase_scan(spec: &ExperimentSpec) -> Result<Vec<PhaseRecord>> {
    let tori = spec
        .n
        .iter()
        .map(|&n| Topology::torus(n, spec.d))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(f64, f64)> = spec
        .mu
        .iter()
        .flat_map(|&mu| spec.lambda.iter().map(move |&l| (mu, l)))
        .collect();
    let points = grid.len() * tori.len();
    let jobs = grid_replicas(spec, points);
    let results = fan_out(jobs.len(), spec.workers, |i| {
        let (p, _, seed) = jobs[i];
        let (mu, lambda) = grid[p / tori.len()];
        stabilize_replica(&tori[p % tori.len()], mu, lambda, seed, spec.cap)
    })?;
    let mut rows = Vec::with_capacity(points);
    for (g, &(mu, lambda)) in grid.iter().enumerate() {
        let mut group = Vec::new();
        for (t, topo) in tori.iter().enumerate() {
            let p = g * tori.len() + t;
            let chunk = &results[p * spec.replicas..(p + 1) * spec.replicas];
            let top: Vec<f64> = chunk.iter().map(|r| r.topplings as f64).collect();
            let median = quantiles(&top).median;
            group.push((topo.n(), median, median / topo.volume() as f64, chunk.iter().filter(|r| !r.terminated).count()));
        }
        let censored_any = group.iter().any(|g| g.3 > 0);
        // Sparse small tori often have median zero; measure growth from the
        // first size that topples at all.
        let first = group.iter().map(|g| g.2).find(|&m| m > 0.0);
        let last = group.last().map(|g| g.2).unwrap_or(0.0);
        let growth = first.map_or(1.0, |f| last / f);
        let label = if censored_any || growth > PHASE_GROWTH_THRESHOLD {
            "slow (heuristic)"
        } else {
            "fast (heuristic)"
        };
        let condition_satisfied = mu > 0.0
            && mu < 1.0
            && bounds::active_phase_condition(spec.d, mu, lambda)?.satisfied;
        for (n, median, per_site, censored) in group {
            rows.push(PhaseRecord {
                mu,
                lambda,
                n,
                median_topplings: median,
                median_per_site: per_site,
                censored,
                label: label.to_string(),
                condition_satisfied,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- IDLA

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdlaRecord {
    pub seed: u64,
    pub d: usize,
    pub radius: f64,
    pub beta: f64,
    pub particles: u64,
    pub origin_occupied: bool,
}

impl Record for IdlaRecord {
    const HEADER: &'static str = "seed,d,radius,beta,particles,origin_occupied";

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.seed, self.d, self.radius, self.beta, self.particles, self.origin_occupied
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdlaSummary {
    pub estimate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub replicas: usize,
    pub particles: u64,
    pub torus_side: usize,
    pub placement: String,
}

/// Integer points `z` with `R ≤ |z|_2 < R + 1`.
pub fn shell_points(d: usize, radius: f64) -> Vec<Vec<i64>> {
    let reach = radius.ceil() as i64 + 1;
    let mut out = Vec::new();
    let mut z = vec![-reach; d];
    loop {
        let r2: f64 = z.iter().map(|&c| (c * c) as f64).sum();
        if r2 >= radius * radius && r2 < (radius + 1.0) * (radius + 1.0) {
            out.push(z.clone());
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if z[axis] < reach {
                z[axis] += 1;
                break;
            }
            z[axis] = -reach;
        }
    }
}

/// Torus side on which IDLA from the shell never wraps: every walker stops
/// within `N` steps of its start, which lies within `⌈R⌉ + 1` per axis.
pub fn idla_torus_side(radius: f64, particles: u64) -> usize {
    2 * (radius.ceil() as usize + 1 + particles as usize) + 3
}

/// One IDLA replica: `⌊βR^d⌋` particles, each at a uniform point of the
/// shell (independently, so several may share a site); returns whether the
/// origin ends up occupied.
pub fn idla_replica(d: usize, radius: f64, beta: f64, seed: u64, cap: u64) -> Result<IdlaRecord> {
    let particles = (beta * radius.powi(d as i32)).floor() as u64;
    let shell = shell_points(d, radius);
    let topo = Topology::torus(idla_torus_side(radius, particles), d)?;
    let mut counts = vec![0u32; topo.volume()];
    let mut r = rng::stream(seed, INITIAL_STREAM);
    for _ in 0..particles {
        let z = &shell[r.random_range(0..shell.len())];
        counts[topo.site_at(z).expect("torus projection")] += 1;
    }
    let out = idla_stabilize(Configuration::from_counts(counts), &topo, derive(seed, FIELD_STREAM), cap)?;
    if !out.stabilized() {
        return Err(ArwError::param(format!("IDLA replica {seed} exceeded the cap")));
    }
    let origin = topo.site_at(&vec![0; d]).expect("torus projection");
    Ok(IdlaRecord {
        seed,
        d,
        radius,
        beta,
        particles,
        origin_occupied: out.config.occupation(origin) > 0,
    })
}

pub const DEFAULT_IDLA_BETA: f64 = 0.05;

pub fn idla_fluctuation(spec: &ExperimentSpec) -> Result<(Vec<IdlaRecord>, IdlaSummary)> {
    let radius = spec.radius.ok_or_else(|| ArwError::param("idla-fluctuation needs a radius"))?;
    let beta = spec.beta.unwrap_or(DEFAULT_IDLA_BETA);
    let records = fan_out(spec.replicas, spec.workers, |r| {
        idla_replica(spec.d, radius, beta, replica_seed(spec.seed, 0, r as u64), spec.cap)
    })?;
    let hits = records.iter().filter(|r| r.origin_occupied).count() as u64;
    let (lo, hi) = wilson_interval(hits, records.len() as u64, 0.95);
    let particles = records.first().map(|r| r.particles).unwrap_or(0);
    Ok((
        records,
        IdlaSummary {
            estimate: hits as f64 / spec.replicas as f64,
            wilson_low: lo,
            wilson_high: hi,
            replicas: spec.replicas,
            particles,
            torus_side: idla_torus_side(radius, particles),
            placement: "each particle i.i.d. uniform on the integer points of R <= |z|_2 < R+1".into(),
        },
    ))
}

// ---------------------------------------------------------------- chain bound

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainBoundRecord {
    pub k: usize,
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub bound: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
}

impl Record for ChainBoundRecord {
    const HEADER: &'static str = "k,lambda,M,bound,mc_estimate,mc_stderr";

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.k, self.lambda, self.m, self.bound, self.mc_estimate, self.mc_stderr
        )
    }
}

pub const DEFAULT_HORIZONS: [u64; 3] = [10, 100, 1000];

/// Random subset of the torus with inclusion probability `μ` (never empty:
/// falls back to the origin).
pub fn random_subset(topo: &Topology, mu: f64, seed: u64) -> SiteSet {
    let mut r = rng::stream(seed, INITIAL_STREAM);
    let mut sites: Vec<usize> = (0..topo.volume()).filter(|_| r.random::<f64>() < mu).collect();
    if sites.is_empty() {
        sites.push(0);
    }
    SiteSet::from_sites(topo.volume(), sites)
}

/// For each torus size and λ: a random set `A` of density `μ`, its greedy
/// order and reduced chain, and the bound `min(1, Mν(k+1))` against a
/// Monte Carlo estimate of `P(T_{k+1} ≤ M)` over `replicas` samples.
pub fn chain_bound(spec: &ExperimentSpec) -> Result<Vec<ChainBoundRecord>> {
    let mu = spec.single("mu", &spec.mu)?;
    let horizons: Vec<u64> = if spec.m.is_empty() {
        DEFAULT_HORIZONS.to_vec()
    } else {
        spec.m.clone()
    };
    let grid: Vec<(usize, f64)> = spec
        .n
        .iter()
        .flat_map(|&n| spec.lambda.iter().map(move |&l| (n, l)))
        .collect();
    let max_m = horizons.iter().copied().max().unwrap_or(0);
    let per_point = fan_out(grid.len(), spec.workers, |p| {
        let (n, lambda) = grid[p];
        let topo = Topology::torus(n, spec.d)?;
        let seed = replica_seed(spec.seed, p as u64, 0);
        let set = random_subset(&topo, mu, seed);
        let chain = build_chain(&greedy_order(&set, &topo)?, &topo, lambda)?;
        let samples = simulate_absorption(&chain, derive(seed, CLOCK_STREAM), spec.replicas, Some(max_m))?;
        horizons
            .iter()
            .map(|&m| {
                let (est, se) = samples.cdf(m);
                Ok(ChainBoundRecord {
                    k: chain.k,
                    lambda,
                    m,
                    bound: absorption_bound(&chain, m, None)?.bound,
                    mc_estimate: est,
                    mc_stderr: se,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_point.into_iter().flatten().collect())
}

// ---------------------------------------------------------------- staged

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagedRecord {
    pub d: usize,
    pub n: usize,
    pub mu: f64,
    pub lambda: f64,
    pub a: f64,
    pub epsilon: f64,
    #[serde(flatten)]
    pub replica: ReplicaResult,
}

impl Record for StagedRecord {
    const HEADER: &'static str =
        "seed,d,n,mu,lambda,a,epsilon,particles,success,steps_passed,topplings,escaped,boundary_untouched";

    fn csv_row(&self) -> String {
        let r = &self.replica;
        let stage = r.stage.as_ref().expect("staged replica");
        let passed = stage.steps.iter().take_while(|s| s.success).count();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.seed,
            self.d,
            self.n,
            self.mu,
            self.lambda,
            self.a,
            self.epsilon,
            r.particles,
            stage.success,
            passed,
            r.topplings,
            stage.escaped,
            stage.boundary_untouched
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagedSummary {
    pub c: f64,
    pub a: f64,
    pub epsilon: f64,
    pub shrink: usize,
    pub sides: [usize; 4],
    pub successes: usize,
    /// Replicas that passed steps `0..=i`, per `i`.
    pub passed: [usize; 5],
}

pub fn staged_scan(spec: &ExperimentSpec) -> Result<(Vec<StagedRecord>, StagedSummary)> {
    let mu = spec.single("mu", &spec.mu)?;
    let lambda = spec.single("lambda", &spec.lambda)?;
    let n = spec.n[0];
    let c = match spec.c {
        Some(c) => c,
        None => bounds::admissible_c(spec.d, mu, lambda)?.ok_or_else(|| {
            ArwError::param(format!(
                "no admissible c at d={}, μ={mu}, λ={lambda}; pass c explicitly",
                spec.d
            ))
        })?,
    };
    let params = bounds::stage_params(c, spec.d, mu, lambda, spec.beta.unwrap_or(DEFAULT_BETA))?;
    let boxes = nested_boxes(n, spec.d, params.a)?;
    let topo = Topology::torus(n, spec.d)?;
    let records = fan_out(spec.replicas, spec.workers, |r| {
        let seed = replica_seed(spec.seed, 0, r as u64);
        Ok(StagedRecord {
            d: spec.d,
            n,
            mu,
            lambda,
            a: params.a,
            epsilon: params.epsilon,
            replica: staged_replica(&topo, &boxes, params.epsilon, mu, lambda, seed, spec.cap)?,
        })
    })?;
    let mut passed = [0usize; 5];
    for rec in &records {
        let stage = rec.replica.stage.as_ref().expect("staged replica");
        for (i, slot) in passed.iter_mut().enumerate() {
            if stage.steps.get(i).is_some_and(|s| s.success) {
                *slot += 1;
            }
        }
    }
    Ok((
        records.clone(),
        StagedSummary {
            c,
            a: params.a,
            epsilon: params.epsilon,
            shrink: boxes.shrink,
            sides: boxes.sides,
            successes: records.iter().filter(|r| r.replica.terminated).count(),
            passed,
        },
    ))
}

/// The kind-specific result of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScanResult {
    Fixation(FixationScan),
    Mn(MnScan),
    Phase(Vec<PhaseRecord>),
    Idla(Vec<IdlaRecord>, IdlaSummary),
    ChainBound(Vec<ChainBoundRecord>),
    Staged(Vec<StagedRecord>, StagedSummary),
}

impl ScanResult {
    pub fn csv(&self) -> String {
        match self {
            ScanResult::Fixation(s) => to_csv(&s.records),
            ScanResult::Mn(s) => to_csv(&s.records),
            ScanResult::Phase(rows) => to_csv(rows),
            ScanResult::Idla(rows, _) => to_csv(rows),
            ScanResult::ChainBound(rows) => to_csv(rows),
            ScanResult::Staged(rows, _) => to_csv(rows),
        }
    }

    pub fn rows_json(&self) -> Result<String> {
        Ok(match self {
            ScanResult::Fixation(s) => serde_json::to_string_pretty(&s.records)?,
            ScanResult::Mn(s) => serde_json::to_string_pretty(&s.records)?,
            ScanResult::Phase(rows) => serde_json::to_string_pretty(rows)?,
            ScanResult::Idla(rows, _) => serde_json::to_string_pretty(rows)?,
            ScanResult::ChainBound(rows) => serde_json::to_string_pretty(rows)?,
            ScanResult::Staged(rows, _) => serde_json::to_string_pretty(rows)?,
        })
    }

    /// Aggregated view, `None` for kinds whose rows are already aggregates.
    pub fn summary_json(&self) -> Result<Option<String>> {
        Ok(match self {
            ScanResult::Fixation(s) => Some(serde_json::to_string_pretty(&s.summary)?),
            ScanResult::Mn(s) => Some(serde_json::to_string_pretty(&s.points)?),
            ScanResult::Idla(_, s) => Some(serde_json::to_string_pretty(s)?),
            ScanResult::Staged(_, s) => Some(serde_json::to_string_pretty(s)?),
            ScanResult::Phase(_) | ScanResult::ChainBound(_) => None,
        })
    }
}

/// Validates and runs a spec, without touching the file system.
pub fn execute(spec: &ExperimentSpec) -> Result<ScanResult> {
    spec.validate()?;
    Ok(match spec.kind {
        Kind::FixationScan => ScanResult::Fixation(fixation_scan(spec)?),
        Kind::MnScan => ScanResult::Mn(mn_scan(spec)?),
        Kind::PhaseScan => ScanResult::Phase(phase_scan(spec)?),
        Kind::IdlaFluctuation => {
            let (rows, summary) = idla_fluctuation(spec)?;
            ScanResult::Idla(rows, summary)
        }
        Kind::ChainBound => ScanResult::ChainBound(chain_bound(spec)?),
        Kind::Staged => {
            let (rows, summary) = staged_scan(spec)?;
            ScanResult::Staged(rows, summary)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_in_one_dimension() {
        assert_eq!(shell_points(1, 3.0), vec![vec![-3], vec![3]]);
        assert!(shell_points(2, 10.0).iter().all(|z| {
            let r2 = (z[0] * z[0] + z[1] * z[1]) as f64;
            (100.0..121.0).contains(&r2)
        }));
    }

    #[test]
    fn fixation_of_empty_start() {
        let t = Topology::torus(5, 1).unwrap();
        let r = fixation_replica(&t, 0.0, 1.0, 3, 100, None).unwrap();
        assert_eq!(r.fixation_time, Some(0.0));
        assert!(r.terminated);
    }
}
