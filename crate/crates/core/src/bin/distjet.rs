use clap::{Args, Parser, Subcommand};
use distance_jets::evaluator::{inequality_scan, verify_identities};
use distance_jets::flow::{self, io, mcf_compare, FlowConfig, McfConfig, StopReason, Stepper};
use distance_jets::geometry::Immersion;
use distance_jets::recursion::RecursionTable;
use distance_jets::Error;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "distjet", version, about = "Derivatives of the squared distance to a submanifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the polynomial tensor p^{k,s}.
    Derive(DeriveArgs),
    /// Check the projection identities and the recursion against finite differences.
    VerifyIdentities(VerifyArgs),
    /// Scan |A^k|^2 / |B|^(2k-4) over random jets.
    NormScan(ScanArgs),
    /// Run the gradient flow of a closed plane curve.
    Flow(FlowArgs),
    /// Compare flows for decreasing eps with curve-shortening flow.
    McfCompare(McfArgs),
}

#[derive(Args, Serialize)]
struct DeriveArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
    /// `text` or `json`.
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Shape string such as `ellipse:a=2,b=1`.
    #[arg(long)]
    shape: String,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    #[arg(long, default_value_t = 8)]
    samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Directory for `config.json` and `report.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScanArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct FlowArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value = "circle:R=1")]
    shape: String,
    #[arg(long, default_value_t = 64)]
    nodes: usize,
    /// Final time; descent runs until the gradient test when omitted.
    #[arg(long)]
    t_end: Option<f64>,
    /// `descent` or `explicit`.
    #[arg(long, default_value = "descent", value_parser = ["descent", "explicit"])]
    stepper: String,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_steps: usize,
    /// Snapshot spacing: flow time for `explicit`, steps for `descent`.
    #[arg(long)]
    snapshot_every: Option<f64>,
    /// Uniform random node offset applied to the initial curve.
    #[arg(long, default_value_t = 0.0)]
    perturbation: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "distjet-flow")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct McfArgs {
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long, default_value = "circle:R=1")]
    shape: String,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    nodes: usize,
    #[arg(long, default_value_t = 0.4)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    sample_every: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a subcommand, mapped to the process exit code.
enum Failure {
    Usage(String),
    Verification(String),
    Singularity(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::ShapeParse(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Derive(a) => derive(a),
        Command::VerifyIdentities(a) => verify(a),
        Command::NormScan(a) => scan(a),
        Command::Flow(a) => run_flow(a),
        Command::McfCompare(a) => mcf(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Singularity(msg)) => {
            eprintln!("halted: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Writes the configuration before any computation: to `out/config.json`
/// when an output directory is given, always to stderr.
fn echo<T: Serialize>(command: &str, args: &T, out: Option<&Path>) -> Outcome {
    let record = serde_json::json!({ "command": command, "args": args, "version": env!("CARGO_PKG_VERSION") });
    let text = serde_json::to_string_pretty(&record).map_err(Error::from)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.json"), format!("{text}\n"))?;
    }
    eprintln!("{}", serde_json::to_string(&record).map_err(Error::from)?);
    Ok(())
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>, name: &str) -> Outcome {
    let text = serde_json::to_string_pretty(report).map_err(Error::from)?;
    if let Some(dir) = out {
        fs::write(dir.join(name), format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn shape(s: &str) -> Result<Immersion, Failure> {
    s.parse().map_err(Failure::from)
}

fn derive(a: &DeriveArgs) -> Outcome {
    echo("derive", a, None)?;
    if !(2..=8).contains(&a.k) {
        return Err(Failure::Usage(format!("--k must lie in 2..=8, got {}", a.k)));
    }
    if a.s > a.k {
        return Err(Failure::Usage(format!("--s must lie in 0..=k, got {}", a.s)));
    }
    let table = RecursionTable::filled_to(a.k)?;
    let p = table.entry(a.k, a.s)?;
    if a.format == "json" {
        emit(&p.to_json(), None, "")
    } else {
        println!("{p}");
        Ok(())
    }
}

fn verify(a: &VerifyArgs) -> Outcome {
    echo("verify-identities", a, a.out.as_deref())?;
    if !(3..=6).contains(&a.k_max) {
        return Err(Failure::Usage(format!("--k-max must lie in 3..=6, got {}", a.k_max)));
    }
    if a.samples == 0 || !(a.tol > 0.0) {
        return Err(Failure::Usage("--samples and --tol must be positive".into()));
    }
    let report = verify_identities(&shape(&a.shape)?, a.k_max, a.samples, a.tol)?;
    emit(&report, a.out.as_deref(), "report.json")?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "identity error {:.3e}, oracle error {:.3e}, tolerance {:e}",
            report.prop1.max_error(),
            report.oracle.max_error(),
            a.tol
        )))
    }
}

fn scan(a: &ScanArgs) -> Outcome {
    echo("norm-scan", a, a.out.as_deref())?;
    if !(3..=8).contains(&a.k) {
        return Err(Failure::Usage(format!("--k must lie in 3..=8, got {}", a.k)));
    }
    let table = RecursionTable::filled_to(a.k)?;
    let report = inequality_scan(&table, a.k, a.n, a.m, a.samples, a.seed)?;
    emit(&report, a.out.as_deref(), "scan.json")?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("min ratio {:e}", report.min_ratio)))
    }
}

#[derive(Serialize)]
struct FlowSummary {
    stop: StopReason,
    steps: usize,
    rejected_steps: usize,
    final_time: f64,
    final_energy: f64,
    final_radius_fit: f64,
    isoperimetric_deviation: f64,
    final_grad_norm: f64,
    energy_increases: usize,
}

fn run_flow(a: &FlowArgs) -> Outcome {
    echo("flow", a, Some(&a.out))?;
    let stepper: Stepper = a.stepper.parse()?;
    let t_end = match (a.t_end, stepper) {
        (Some(t), _) => t,
        (None, Stepper::Descent) => f64::INFINITY,
        (None, Stepper::Explicit) => return Err(Failure::Usage("--t-end is required for the explicit stepper".into())),
    };
    let defaults = FlowConfig::default();
    let snapshot_every = a.snapshot_every.unwrap_or(match stepper {
        Stepper::Descent => defaults.snapshot_every,
        Stepper::Explicit => t_end / 40.0,
    });
    let config = FlowConfig {
        k: a.k,
        eps: a.eps,
        nodes: a.nodes,
        stepper,
        t_end,
        grad_tol: a.grad_tol,
        max_steps: a.max_steps,
        snapshot_every,
        perturbation: a.perturbation,
        seed: a.seed,
        ..defaults
    };
    config.validate()?;
    let initial = config
        .initial_state(&shape(&a.shape)?)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some((i, j)) = initial.self_intersection() {
        return Err(Failure::Usage(format!("initial curve self-intersects (edges {i}, {j})")));
    }
    let traj = flow::run(&initial, &config)?;

    io::write_snapshots(&traj, BufWriter::new(File::create(a.out.join("snapshots.csv"))?))?;
    let mut energy = BufWriter::new(File::create(a.out.join("energy.csv"))?);
    io::write_energy_log(&traj, &mut energy)?;
    energy.flush()?;

    let last = traj.last();
    let summary = FlowSummary {
        stop: traj.stop,
        steps: traj.steps,
        rejected_steps: traj.rejected_steps,
        final_time: last.time,
        final_energy: traj.energy_log.last().map_or(f64::NAN, |e| e.energy),
        final_radius_fit: last.radius_fit(),
        isoperimetric_deviation: last.isoperimetric_deviation(),
        final_grad_norm: traj.final_grad_norm,
        energy_increases: traj.energy_increases(),
    };
    emit(&summary, Some(&a.out), "summary.json")?;
    if traj.stop == StopReason::SelfIntersection {
        return Err(Failure::Singularity(format!(
            "self-intersection at t = {:e}; last valid snapshot saved",
            last.time
        )));
    }
    Ok(())
}

fn mcf(a: &McfArgs) -> Outcome {
    echo("mcf-compare", a, a.out.as_deref())?;
    let mut config = McfConfig::new(shape(&a.shape)?, a.eps_list.clone());
    config.k = a.k;
    config.nodes = a.nodes;
    config.t_end = a.t_end;
    config.sample_every = a.sample_every;
    let report = mcf_compare(&config)?;
    if let Some(dir) = &a.out {
        let mut w = BufWriter::new(File::create(dir.join("mcf.csv"))?);
        writeln!(w, "eps,deviation,final_radius_fit,steps")?;
        for r in &report.rows {
            writeln!(w, "{:e},{:e},{:e},{}", r.eps, r.deviation, r.final_radius_fit, r.steps)?;
        }
        w.flush()?;
    }
    emit(&report, a.out.as_deref(), "mcf.json")?;
    if report.rows.iter().any(|r| r.stop == StopReason::SelfIntersection) {
        return Err(Failure::Singularity("a run hit a self-intersection".into()));
    }
    if report.monotone {
        Ok(())
    } else {
        Err(Failure::Verification("deviation does not decrease with eps".into()))
    }
}
