//! Argument parsing and dispatch for the `aotoc` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use aotoc_core::gtps::GtpsSpec;
use aotoc_core::linalg::{DEFAULT_EPS_DEG, DEFAULT_EPS_RES};
use aotoc_core::mereology::{
    aotoc_trace, bipartition_sweep, eta_grid, method_comparison, qrf_eta_sweep, qrf_natural, records_to_csv,
    theta_grid, theta_sweep, SweepRecord, Tolerances,
};
use aotoc_core::models::{SpinChainParams, SpinModel, DEFAULT_QRF_COUPLINGS};
use aotoc_core::optimize::{conjecture_suite, enumerate_classes, ConjectureReport, DescentOptions};
use aotoc_core::output::{format_float, to_json};
use aotoc_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "aotoc", version, about = "Long-time scrambling of operator subalgebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file. Standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Worker threads for sweeps and the conjecture suite.
    #[arg(long, global = true, env = "AOTOC_THREADS", default_value_t = 1)]
    threads: usize,

    /// Degeneracy tolerance relative to the spectral range.
    #[arg(long, global = true, default_value_t = DEFAULT_EPS_DEG)]
    eps_deg: f64,

    /// Resonance tolerance relative to the spectral range.
    #[arg(long, global = true, default_value_t = DEFAULT_EPS_RES)]
    eps_res: f64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rotated five-qubit code algebras under the Heisenberg ring.
    StabilizerSweep {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        h: f64,
        #[arg(long, default_value_t = 33)]
        theta_steps: usize,
    },
    /// Two-frame toy model: spin-direction sweeps or the natural algebras.
    Qrf {
        #[arg(long, default_value_t = 2, conflicts_with = "natural")]
        frame: usize,
        #[arg(long, default_value_t = 64, conflicts_with = "natural")]
        eta_grid: usize,
        /// The natural algebras of frame 1 instead of a sweep.
        #[arg(long)]
        natural: bool,
        /// Distinct couplings Jx, Jy, Jz.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = DEFAULT_QRF_COUPLINGS)]
        couplings: Vec<f64>,
    },
    /// Every half-chain bipartition of a spin chain.
    Bipartitions {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Algebra classes of a given Hilbert-space dimension.
    Enumerate {
        #[arg(long)]
        d: usize,
        /// Print only the number of classes.
        #[arg(long)]
        counts_only: bool,
    },
    /// Gradient descent from Haar-random starts for every class.
    Conjecture {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[command(flatten)]
        descent: DescentArgs,
    },
    /// Exact, NRC and NRC+ averages side by side for every bipartition.
    ExactVsNrc {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Instantaneous A-OTOC trace of one subset algebra.
    AotocCurve {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Qubits of the subsystem, 1-based. Defaults to the first half.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long, default_value = "tfim")]
    model: String,
    #[arg(long, default_value_t = 6)]
    n: usize,
    /// Coupling override `key=value`, repeatable. Missing keys take the
    /// model defaults.
    #[arg(long = "coupling", value_name = "KEY=VALUE", allow_negative_numbers = true)]
    couplings: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DescentArgs {
    /// Stop once an accepted step changes the value by less than this.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.1)]
    initial_step: f64,
    #[arg(long, default_value_t = 1e-12)]
    min_step: f64,
}

/// Everything that determines the output of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub descent: DescentOptions,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

impl RunConfig {
    pub fn validate(&self) -> aotoc_core::Result<()> {
        self.tolerances.validate()?;
        self.descent.validate()?;
        if self.threads == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        Ok(())
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let descent = match &cli.command {
            Command::Conjecture { descent, .. } => DescentOptions {
                eps: descent.eps,
                max_iter: descent.max_iter,
                initial_step: descent.initial_step,
                min_step: descent.min_step,
            },
            _ => DescentOptions::default(),
        };
        Self {
            command: cli.command,
            seed: cli.seed,
            tolerances: Tolerances { eps_deg: cli.eps_deg, eps_res: cli.eps_res },
            descent,
            output_path: cli.out,
            format: cli.format,
            threads: cli.threads,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn split(self) -> (i32, String) {
        match self {
            Failure::Usage(m) => (EXIT_USAGE, m),
            Failure::Numerical(m) => (EXIT_NUMERICAL, m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalConsistency(_) => Failure::Numerical(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("serialisation failed: {e}"))
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&RunConfig::from(cli)) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let (code, msg) = f.split();
            eprintln!("error: {msg}");
            code
        }
    }
}

fn execute(cfg: &RunConfig) -> Result<(), Failure> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start thread pool: {e}")))?;
    let text = pool.install(|| render(cfg))?;
    match &cfg.output_path {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}"))),
    }
}

fn render(cfg: &RunConfig) -> Result<String, Failure> {
    let tol = &cfg.tolerances;
    match &cfg.command {
        Command::StabilizerSweep { h, theta_steps } => {
            if *theta_steps < 2 {
                return Err(Failure::Usage("--theta-steps must be at least 2".into()));
            }
            records(cfg, theta_sweep(*h, &theta_grid(*theta_steps), tol)?)
        }
        Command::Qrf { frame, eta_grid: n, natural, couplings } => {
            let j: [f64; 3] = couplings.as_slice().try_into().map_err(|_| {
                Failure::Usage(format!("--couplings needs three values, got {}", couplings.len()))
            })?;
            let recs = if *natural { qrf_natural(j, tol)? } else { qrf_eta_sweep(*frame, &eta_grid(*n)?, j, tol)? };
            records(cfg, recs)
        }
        Command::Bipartitions { chain } => {
            let p = chain.params()?;
            records(cfg, bipartition_sweep(&p, p.n / 2, tol)?)
        }
        Command::ExactVsNrc { chain } => records(cfg, method_comparison(&chain.params()?, tol)?),
        Command::Enumerate { d, counts_only } => {
            let e = enumerate_classes(*d, *counts_only)?;
            Ok(match (counts_only, cfg.format) {
                (true, _) => format!("{}\n", e.count),
                (false, Format::Json) => line(to_json(&e)?),
                (false, Format::Csv) => {
                    let mut out = String::from("spec\n");
                    for c in &e.classes {
                        out.push_str(&spec_label(c));
                        out.push('\n');
                    }
                    out
                }
            })
        }
        Command::Conjecture { d, restarts, .. } => {
            let report = conjecture_suite(*d, *restarts, &cfg.descent, cfg.seed)?;
            if report.classes.iter().any(|c| !c.best_value.is_finite()) {
                return Err(Failure::Numerical("descent produced a non-finite value".into()));
            }
            Ok(match cfg.format {
                Format::Json => line(to_json(&report)?),
                Format::Csv => conjecture_csv(&report),
            })
        }
        Command::AotocCurve { chain, t_max, samples, subset } => {
            let p = chain.params()?;
            let subset = subset.clone().unwrap_or_else(|| (1..=p.n / 2).collect());
            let trace = aotoc_trace(&p, &subset, *t_max, *samples)?;
            if trace.points.iter().any(|pt| !pt.aotoc.is_finite()) {
                return Err(Failure::Numerical("non-finite A-OTOC value".into()));
            }
            Ok(match cfg.format {
                Format::Json => line(to_json(&trace)?),
                Format::Csv => trace.to_csv(),
            })
        }
    }
}

fn records(cfg: &RunConfig, recs: Vec<SweepRecord>) -> Result<String, Failure> {
    for r in &recs {
        r.validate()?;
    }
    Ok(match cfg.format {
        Format::Json => line(to_json(&recs)?),
        Format::Csv => records_to_csv(&recs),
    })
}

fn line(mut s: String) -> String {
    s.push('\n');
    s
}

/// Sectors as `n x d` pairs separated by spaces, e.g. `1x2 2x1`.
fn spec_label(spec: &GtpsSpec) -> String {
    spec.pairs().iter().map(|(n, d)| format!("{n}x{d}")).collect::<Vec<_>>().join(" ")
}

fn conjecture_csv(report: &ConjectureReport) -> String {
    let mut out = String::from("spec,best_value,conjectured_min,gap,converged\n");
    for c in &report.classes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            spec_label(&c.spec),
            format_float(c.best_value),
            format_float(c.conjectured_min),
            format_float(c.gap),
            c.converged
        ));
    }
    out
}

impl ChainArgs {
    fn params(&self) -> aotoc_core::Result<SpinChainParams> {
        let model: SpinModel = self.model.parse()?;
        let mut couplings: BTreeMap<String, f64> = model.default_couplings();
        for kv in &self.couplings {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("coupling {kv:?} is not KEY=VALUE")))?;
            let k = k.trim();
            if !model.required_keys().contains(&k) {
                return Err(Error::InvalidArgument(format!(
                    "model {model} has no coupling {k:?} (expected {:?})",
                    model.required_keys()
                )));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("coupling {kv:?} has a non-numeric value")))?;
            couplings.insert(k.to_string(), v);
        }
        SpinChainParams::new(self.n, model, couplings)
    }
}
