use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rydemu::estimate::{ResourceReport, SV_BUDGET_KRYLOV_DIM};
use rydemu::harness::{
    compare, rows_csv, run, validate, write_atomic, AdiabaticParams, Backend, BenchmarkGrid, Layout, RunConfig, RunResult, SequenceFile,
};
use rydemu::{Error, Result};

/// Default worker-thread count when neither `--threads` nor the config sets one.
const THREADS_ENV: &str = "RYDEMU_THREADS";

#[derive(Parser)]
#[command(name = "rydemu", version, about = "Pulse-level emulator for neutral-atom Rydberg arrays")]
struct Cli {
    /// Worker threads [default: $RYDEMU_THREADS, else all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a sequence and write the result JSON.
    Run(RunArgs),
    /// Time the generator workload over a grid of sizes and backends.
    Benchmark(BenchArgs),
    /// Memory and runtime estimates with a backend recommendation.
    Estimate(EstimateArgs),
    /// Norm differences, fidelities and observable differences between two results.
    Compare(CompareArgs),
    /// Check a sequence and configuration without running.
    Validate(RunArgs),
    /// Write the adiabatic generator sequence for N atoms.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    sequence: PathBuf,
    config: Option<PathBuf>,
    #[arg(long)]
    backend: Option<Backend>,
    /// Step length in ns.
    #[arg(long)]
    dt: Option<usize>,
    /// Krylov tolerance (sv, oracle) or truncation precision (mps).
    #[arg(long)]
    precision: Option<f64>,
    #[arg(long)]
    max_bond_dim: Option<usize>,
    /// Reverse Cuthill-McKee site ordering (mps).
    #[arg(long)]
    reorder: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Bytes; accepts k, M, G suffixes.
    #[arg(long, value_parser = parse_bytes)]
    memory_budget: Option<u64>,
    /// Result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Grid file; flags below override its fields.
    grid: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    qubits: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    backend: Vec<Backend>,
    #[arg(long, value_delimiter = ',')]
    dt: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    max_bond_dim: Vec<usize>,
    #[arg(long)]
    precision: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Wall-clock cap per cell, seconds.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    layout: Option<Layout>,
    #[arg(long, value_parser = parse_bytes)]
    memory_budget: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    qubits: usize,
    /// Backend to check against the budget.
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long, default_value_t = 64)]
    max_bond_dim: usize,
    #[arg(long, default_value_t = SV_BUDGET_KRYLOV_DIM)]
    krylov_dim: usize,
    #[arg(long, value_parser = parse_bytes, default_value = "8G")]
    memory_budget: u64,
    /// JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    /// JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    qubits: usize,
    #[arg(long, default_value = "chain")]
    layout: Layout,
    #[arg(long)]
    spacing: Option<f64>,
    #[arg(long)]
    duration: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_bytes(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim().trim_end_matches(['B', 'b']);
    let (num, scale) = match t.char_indices().last() {
        Some((i, 'k' | 'K')) => (&t[..i], 1e3),
        Some((i, 'M')) => (&t[..i], 1e6),
        Some((i, 'G')) => (&t[..i], 1e9),
        Some((i, 'T')) => (&t[..i], 1e12),
        _ => (t, 1.0),
    };
    match num.trim().parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok((v * scale) as u64),
        _ => Err(format!("not a byte count: {s}")),
    }
}

fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = flag.or(config) {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, format!("{text}\n").as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_run(args: &RunArgs, threads: Option<usize>) -> Result<(SequenceFile, RunConfig)> {
    let seq = SequenceFile::load(&args.sequence)?;
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if let Some(dt) = args.dt {
        cfg.dt_ns = dt;
    }
    if let Some(p) = args.precision {
        cfg.set_precision(p);
    }
    if let Some(chi) = args.max_bond_dim {
        cfg.mps.max_bond_dim = chi;
    }
    if args.reorder {
        cfg.mps.reorder = true;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.memory_budget {
        cfg.memory_budget_bytes = m;
    }
    if let Some(o) = &args.out {
        cfg.output.json = Some(o.clone());
    }
    cfg.threads = thread_count(threads, cfg.threads)?;
    cfg.validate()?;
    Ok((seq, cfg))
}

fn cmd_run(args: RunArgs, threads: Option<usize>) -> Result<()> {
    let (seq, cfg) = load_run(&args, threads)?;
    init_threads(cfg.threads)?;
    let result = run(&seq, &cfg)?;
    if cfg.output.json.is_none() {
        println!("{}", result.to_json()?);
    }
    result.write_outputs()?;
    let d = &result.diagnostics;
    eprintln!(
        "{} backend: {} qubits, {} steps of {} ns, final norm {:.12}, {:.3} s",
        d.backend, d.qubits, d.steps, d.dt_ns, d.final_norm, result.timing.total_wall_s
    );
    if let Some(m) = &d.mps {
        eprintln!("max bond {}, truncation weight {:.3e}, saturated {}", m.max_bond, m.truncation_weight, m.saturated);
    }
    Ok(())
}

fn cmd_validate(args: RunArgs, threads: Option<usize>) -> Result<()> {
    let (seq, cfg) = load_run(&args, threads)?;
    println!("{}", validate(&seq, &cfg)?);
    Ok(())
}

fn cmd_benchmark(args: BenchArgs, threads: Option<usize>) -> Result<()> {
    let mut grid = match &args.grid {
        Some(p) => BenchmarkGrid::load(p)?,
        None => BenchmarkGrid::default(),
    };
    if !args.qubits.is_empty() {
        grid.qubits = args.qubits;
    }
    if !args.backend.is_empty() {
        grid.backends = args.backend;
    }
    if !args.dt.is_empty() {
        grid.dt_ns = args.dt;
    }
    if !args.max_bond_dim.is_empty() {
        grid.max_bond_dims = args.max_bond_dim;
    }
    if let Some(p) = args.precision {
        grid.sv_precision = p;
        grid.mps_precision = p;
    }
    if let Some(r) = args.repeats {
        grid.repeats = r;
    }
    if let Some(t) = args.timeout {
        grid.timeout_s = t;
    }
    if let Some(l) = args.layout {
        grid.workload.layout = l;
    }
    if let Some(m) = args.memory_budget {
        grid.memory_budget_bytes = m;
    }
    grid.threads = thread_count(threads, grid.threads)?;
    init_threads(grid.threads)?;
    let rows = grid.run(|r| {
        let median = r.median_s.map_or("-".to_string(), |t| format!("{t:.4} s"));
        eprintln!(
            "N={:<3} {:<6} dt={:<4} chi={:<6} {:?} median {median}",
            r.qubits,
            r.backend,
            r.dt_ns,
            r.max_bond_dim.map_or("-".to_string(), |c| c.to_string()),
            r.status
        );
    })?;
    let csv = String::from_utf8(rows_csv(&rows)?).expect("CSV is UTF-8");
    emit(args.out.as_deref(), csv.trim_end())
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let report = ResourceReport::new(args.qubits, args.max_bond_dim, args.krylov_dim, args.memory_budget);
    println!("{report}");
    if let Some(b) = args.backend {
        let need = match b {
            Backend::Mps => report.mps_memory_bytes,
            Backend::Sv | Backend::Oracle => report.sv_memory_bytes,
        };
        let verdict = if need <= args.memory_budget { "fits" } else { "exceeds" };
        println!("{b} estimate {verdict} the budget");
    }
    if let Some(p) = &args.out {
        write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let a = RunResult::load(&args.a)?;
    let b = RunResult::load(&args.b)?;
    let report = compare(&a, &b)?;
    print!("{report}");
    if let Some(p) = &args.out {
        write_atomic(p, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut params = AdiabaticParams {
        layout: args.layout,
        ..AdiabaticParams::default()
    };
    if let Some(s) = args.spacing {
        params.spacing_um = s;
    }
    if let Some(d) = args.duration {
        params.duration_ns = d;
    }
    let seq = params.sequence(args.qubits)?;
    emit(args.out.as_deref(), &seq.to_json()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a, threads),
        Command::Validate(a) => cmd_validate(a, threads),
        Command::Benchmark(a) => cmd_benchmark(a, threads),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
