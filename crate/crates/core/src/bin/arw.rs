use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use arw::bounds::{self, DEFAULT_BETA};
use arw::engine::{stabilize, Configuration, InstructionField, Policy, DEFAULT_CAP};
use arw::experiments::{self, sample_initial, ExperimentSpec, Format, Kind, ScanResult, FIELD_STREAM};
use arw::lattice::Topology;
use arw::rng::derive;
use arw::ArwError;

#[derive(Parser)]
#[command(name = "arw", version, about = "Activated random walk simulations and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stabilize one configuration and print the final state and odometer.
    Stabilize(StabilizeArgs),
    /// Continuous-time fixation on tori, per side length.
    FixationScan(Common),
    /// Particles killed at the boundary of open boxes, per side length.
    MnScan(Common),
    /// Toppling growth over a (μ, λ) grid, with heuristic phase labels.
    PhaseScan(Common),
    /// IDLA from a shell of radius R: probability that the origin is occupied.
    Idla(Common),
    /// Reduced-chain absorption bound against Monte Carlo.
    ChainBound(Common),
    /// The staged torus procedure.
    Staged(Common),
    /// Constants of the explicit slow-phase condition, as JSON.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON experiment spec; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// Side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    mu: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Topplings per replica.
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Output directory; results go to standard output without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Horizons M of chain-bound, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Vec<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fifo,
    Lowest,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Torus,
    Box,
}

#[derive(Args)]
struct StabilizeArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value = "torus")]
    topology: TopologyArg,
    /// Poisson density of the initial configuration (ignored with --initial).
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    #[arg(long, value_enum, default_value = "fifo")]
    policy: PolicyArg,
    /// File holding the initial configuration: a JSON array of `0`, `"s"` or counts.
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Output file; standard output without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, ArwError> {
    fs::read_to_string(path).map_err(|source| ArwError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ArwError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| ArwError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_spec(kind: Kind, c: Common) -> Result<ExperimentSpec, ArwError> {
    let mut spec = match &c.config {
        Some(path) => {
            let spec = ExperimentSpec::from_json(&read(path)?)?;
            if spec.kind != kind {
                return Err(ArwError::InvalidParameter(format!(
                    "config is a {} spec, not {}",
                    spec.kind.name(),
                    kind.name()
                )));
            }
            spec
        }
        None => ExperimentSpec::new(kind),
    };
    macro_rules! set {
        ($($f:ident),*) => {$(
            if let Some(v) = c.$f { spec.$f = v.into(); }
        )*};
    }
    set!(d, seed, replicas, cap);
    if c.t_max.is_some() {
        spec.t_max = c.t_max;
    }
    if c.workers.is_some() {
        spec.workers = c.workers;
    }
    if c.out.is_some() {
        spec.out = c.out;
    }
    if let Some(f) = c.format {
        spec.format = f.into();
    }
    for (dst, src) in [(&mut spec.beta, c.beta), (&mut spec.radius, c.radius), (&mut spec.c, c.c)] {
        if src.is_some() {
            *dst = src;
        }
    }
    if !c.n.is_empty() {
        spec.n = c.n;
    }
    if !c.mu.is_empty() {
        spec.mu = c.mu;
    }
    if !c.lambda.is_empty() {
        spec.lambda = c.lambda;
    }
    if !c.m.is_empty() {
        spec.m = c.m;
    }
    Ok(spec)
}

fn scan(kind: Kind, common: Common) -> Result<(), ArwError> {
    let spec = build_spec(kind, common)?;
    let output = experiments::run(&spec)?;
    if spec.out.is_none() {
        let text = match spec.format {
            Format::Csv => output.result.csv(),
            Format::Json => output.result.rows_json()? + "\n",
        };
        emit(None, &text)?;
        if let (ScanResult::Idla(_, s), Format::Csv) = (&output.result, spec.format) {
            eprintln!(
                "origin occupied: {:.4} (95% Wilson interval [{:.4}, {:.4}])",
                s.estimate, s.wilson_low, s.wilson_high
            );
        }
    } else {
        for f in &output.files {
            eprintln!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn run_stabilize(a: StabilizeArgs) -> Result<(), ArwError> {
    let topo = match a.topology {
        TopologyArg::Torus => Topology::torus(a.n, a.d)?,
        TopologyArg::Box => Topology::open_box(a.n, a.d)?,
    };
    let eta0 = match &a.initial {
        Some(path) => {
            let eta: Configuration = serde_json::from_str(&read(path)?)?;
            if eta.volume() != topo.volume() {
                return Err(ArwError::InvalidParameter(format!(
                    "initial configuration has {} sites, the lattice {}",
                    eta.volume(),
                    topo.volume()
                )));
            }
            eta
        }
        None => sample_initial(&topo, a.mu, a.seed)?,
    };
    let field = InstructionField::standard(derive(a.seed, FIELD_STREAM), topo.degree(), a.lambda)?;
    let policy = match a.policy {
        PolicyArg::Fifo => Policy::Fifo,
        PolicyArg::Lowest => Policy::LowestIndex,
        PolicyArg::Random => Policy::UniformRandom { seed: a.seed },
    };
    let particles = eta0.total_particles();
    let out = stabilize(&topo, &field, eta0, &topo.all_sites(), policy, a.cap)?;
    let text = match a.format {
        FormatArg::Json => {
            let value = json!({
                "particles": particles,
                "topplings": out.topplings,
                "killed": out.killed,
                "stabilized": out.stabilized(),
                "config": out.config,
                "odometer": out.odometer,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        FormatArg::Csv => {
            let mut s = String::from("site,state,odometer\n");
            for (x, (state, m)) in out.config.states().zip(out.odometer.as_slice()).enumerate() {
                s.push_str(&format!("{x},{state},{m}\n"));
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}

fn run_bounds(a: BoundsArgs) -> Result<(), ArwError> {
    let report = bounds::report(a.d, a.mu, a.lambda, a.c, a.beta)?;
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Stabilize(a) => run_stabilize(a),
        Command::FixationScan(c) => scan(Kind::FixationScan, c),
        Command::MnScan(c) => scan(Kind::MnScan, c),
        Command::PhaseScan(c) => scan(Kind::PhaseScan, c),
        Command::Idla(c) => scan(Kind::IdlaFluctuation, c),
        Command::ChainBound(c) => scan(Kind::ChainBound, c),
        Command::Staged(c) => scan(Kind::Staged, c),
        Command::Bounds(a) => run_bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("arw: {e}");
            ExitCode::from(if matches!(e, ArwError::Io { .. }) { 2 } else { 1 })
        }
    }
}
