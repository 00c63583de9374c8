use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    FixationScan,
    MnScan,
    PhaseScan,
    IdlaFluctuation,
    ChainBound,
    Staged,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::FixationScan => "fixation-scan",
            Kind::MnScan => "mn-scan",
            Kind::PhaseScan => "phase-scan",
            Kind::IdlaFluctuation => "idla-fluctuation",
            Kind::ChainBound => "chain-bound",
            Kind::Staged => "staged",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub const DEFAULT_SCAN_CAP: u64 = 100_000_000;

fn default_d() -> usize {
    1
}

fn default_replicas() -> usize {
    50
}

fn default_cap() -> u64 {
    DEFAULT_SCAN_CAP
}

/// A measurement campaign. Which fields matter depends on `kind`; lists
/// hold a single value for the kinds that do not scan over them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Kind,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    /// Topplings per replica.
    #[serde(default = "default_cap")]
    pub cap: u64,
    /// Simulated-time limit of continuous-time runs.
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Output directory; standard output when absent.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// IDLA density (idla-fluctuation, staged).
    #[serde(default)]
    pub beta: Option<f64>,
    /// Inner radius of the IDLA shell.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Rate constant for the staged parameters; defaults to the admissible
    /// one.
    #[serde(default)]
    pub c: Option<f64>,
    /// Horizons `M` of chain-bound.
    #[serde(default)]
    pub m: Vec<u64>,
}

impl ExperimentSpec {
    pub fn new(kind: Kind) -> Self {
        ExperimentSpec {
            kind,
            d: default_d(),
            n: Vec::new(),
            mu: Vec::new(),
            lambda: Vec::new(),
            replicas: default_replicas(),
            seed: 0,
            cap: default_cap(),
            t_max: None,
            workers: None,
            out: None,
            format: Format::Csv,
            beta: None,
            radius: None,
            c: None,
            m: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub(crate) fn single(&self, name: &str, values: &[f64]) -> Result<f64> {
        match values {
            [v] => Ok(*v),
            [] => Err(ArwError::param(format!("{} needs {name}", self.kind.name()))),
            _ => Err(ArwError::param(format!("{} takes a single {name}", self.kind.name()))),
        }
    }

    /// Rejects inconsistent specs before anything is simulated.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ArwError::param(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.cap == 0 {
            return bad("cap must be positive".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if let Some(t) = self.t_max {
            if t.is_nan() || t <= 0.0 {
                return bad(format!("t_max={t} must be positive"));
            }
        }
        if self.n.contains(&0) {
            return bad("side lengths must be positive".into());
        }
        if let Some(&m) = self.mu.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return bad(format!("μ={m} must be finite and ≥ 0"));
        }
        if let Some(&l) = self.lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return bad(format!("λ={l} must be finite and > 0"));
        }
        for (name, v) in [("beta", self.beta), ("radius", self.radius), ("c", self.c)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name}={v} must be finite and > 0"));
                }
            }
        }
        let needs_n = !matches!(self.kind, Kind::IdlaFluctuation);
        if needs_n && self.n.is_empty() {
            return bad(format!("{} needs at least one n", self.kind.name()));
        }
        match self.kind {
            Kind::FixationScan | Kind::MnScan | Kind::Staged => {
                self.single("mu", &self.mu)?;
                self.single("lambda", &self.lambda)?;
            }
            Kind::PhaseScan => {
                if self.mu.is_empty() || self.lambda.is_empty() {
                    return bad("phase-scan needs μ and λ grids".into());
                }
            }
            Kind::IdlaFluctuation => {
                if self.radius.is_none() {
                    return bad("idla-fluctuation needs a radius".into());
                }
            }
            Kind::ChainBound => {
                let mu = self.single("mu", &self.mu)?;
                if mu > 1.0 {
                    return bad(format!("chain-bound density μ={mu} must be ≤ 1"));
                }
                if self.lambda.is_empty() {
                    return bad("chain-bound needs λ".into());
                }
            }
        }
        if self.kind == Kind::Staged {
            if self.n.len() != 1 {
                return bad("staged takes a single n".into());
            }
            let mu = self.mu[0];
            if mu == 0.0 && self.c.is_none() {
                return bad("staged with μ=0 needs an explicit c".into());
            }
        }
        Ok(())
    }
}
