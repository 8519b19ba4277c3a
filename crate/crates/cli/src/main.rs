use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use neuralif::bench::{
    self, convergence_trace, run_bench, spectrum, summarize, write_bench_csv, write_spectrum_csv, write_trace_csv,
    BenchConfig, SpectrumMethod, TraceConfig,
};
use neuralif::datagen::{gen_dataset, load_dataset, DatasetSpec, LoadedInstance, MeshFamily};
use neuralif::krylov::{pcg_split, SolveConfig};
use neuralif::model::{load_model, save_model_with_metadata, ModelParams};
use neuralif::precond::PrecondKind;
use neuralif::sparse::io::{read_matrix_market, read_vector};
use neuralif::train::{mean_loss, train, Sample, TrainConfig};
use neuralif::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "neuralif", version, about = "Learned incomplete factorization preconditioners for conjugate gradients")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of SPD systems.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Solve one system with preconditioned CG.
    Solve(SolveArgs),
    /// Benchmark preconditioners over a dataset.
    Bench(BenchArgs),
    /// Eigenvalue analysis of a (preconditioned) matrix.
    Analyze(AnalyzeArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random sparse SPD matrices A = B Bᵀ + αI.
    Random(GenRandomArgs),
    /// Poisson problems on random 2-D meshes.
    Poisson(GenPoissonArgs),
}

#[derive(Args)]
struct GenRandomArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1e-2)]
    alpha: f64,
    #[arg(long, default_value_t = 0.80)]
    sparsity_lo: f64,
    #[arg(long, default_value_t = 0.90)]
    sparsity_hi: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; files go to <out>/random.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Convex,
    ConvexWithHole,
    Polytope,
}

impl From<FamilyArg> for MeshFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Convex => MeshFamily::Convex,
            FamilyArg::ConvexWithHole => MeshFamily::ConvexWithHole,
            FamilyArg::Polytope => MeshFamily::Polytope,
        }
    }
}

#[derive(Args)]
struct GenPoissonArgs {
    /// Smallest target mesh vertex count.
    #[arg(long, default_value_t = 2500)]
    min_vertices: usize,
    /// Largest target mesh vertex count.
    #[arg(long, default_value_t = 5500)]
    max_vertices: usize,
    /// Mesh family; all three are cycled when omitted.
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Points sampled on each domain outline.
    #[arg(long, default_value_t = neuralif::datagen::DEFAULT_OUTLINE_POINTS)]
    outline_points: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; files go to <out>/poisson.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Validation dataset directory; the last tenth of --data is held out
    /// when omitted.
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Global gradient-norm clipping threshold.
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model checkpoint to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side; all ones when omitted.
    #[arg(long)]
    rhs: Option<PathBuf>,
    #[arg(long, default_value = "none", value_parser = parse_precond)]
    precond: PrecondKind,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Write the per-iteration convergence trace to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated list; defaults to every preconditioner available.
    #[arg(long, value_delimiter = ',', value_parser = parse_precond)]
    preconds: Option<Vec<PrecondKind>>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output directory for bench.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Also estimate the preconditioned condition number.
    #[arg(long, value_enum)]
    kappa: Option<EigArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EigArg {
    Dense,
    Extremal,
}

impl From<EigArg> for SpectrumMethod {
    fn from(e: EigArg) -> Self {
        match e {
            EigArg::Dense => SpectrumMethod::Dense,
            EigArg::Extremal => SpectrumMethod::Extremal,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Comma-separated list of preconditioners to analyze.
    #[arg(long, default_value = "none", value_delimiter = ',', value_parser = parse_precond)]
    precond: Vec<PrecondKind>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dense")]
    eig: EigArg,
    /// Output directory for spectrum.csv.
    #[arg(long)]
    out: PathBuf,
}

fn parse_precond(s: &str) -> Result<PrecondKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_numerical() => EXIT_NUMERICAL,
            e if e.is_io() => EXIT_IO,
            Error::ArchMismatch(_) => EXIT_IO,
            Error::SpecInfeasible { .. } | Error::DegenerateGeometry(_) | Error::EmptySystem => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen(GenCommand::Random(args)) => {
            let spec = DatasetSpec {
                alpha: args.alpha,
                sparsity_lo: args.sparsity_lo,
                sparsity_hi: args.sparsity_hi,
                ..DatasetSpec::random(args.count, args.n, args.seed)
            };
            generate(&spec, &args.out)
        }
        Command::Gen(GenCommand::Poisson(args)) => {
            let spec = DatasetSpec {
                family: args.family.map(Into::into),
                outline_points: args.outline_points,
                ..DatasetSpec::poisson(args.count, args.min_vertices, args.max_vertices, args.seed)
            };
            generate(&spec, &args.out)
        }
        Command::Train(args) => run_train(args),
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench_cmd(args),
        Command::Analyze(args) => run_analyze(args),
    }
}

fn generate(spec: &DatasetSpec, out: &Path) -> Result<(), Failure> {
    let (manifest, dir) = gen_dataset(spec, out)?;
    let n: Vec<usize> = manifest.instances.iter().map(|e| e.n).collect();
    println!(
        "wrote {} instances to {} (n from {} to {})",
        manifest.instances.len(),
        dir.display(),
        n.iter().min().copied().unwrap_or(0),
        n.iter().max().copied().unwrap_or(0)
    );
    Ok(())
}

fn load_model_for(kind: PrecondKind, model: Option<&Path>) -> Result<Option<ModelParams>, Failure> {
    match (kind, model) {
        (PrecondKind::NeuralIf, None) => Err(usage("--precond neuralif requires --model")),
        (_, Some(path)) => Ok(Some(load_model(path)?)),
        (_, None) => Ok(None),
    }
}

fn run_train(args: TrainArgs) -> Result<(), Failure> {
    let (_, mut train_data) = load_dataset(&args.data)?;
    let val_data: Vec<LoadedInstance> = match &args.val {
        Some(dir) => load_dataset(dir)?.1,
        None => {
            if train_data.len() < 2 {
                return Err(usage("need at least two instances to hold out a validation set"));
            }
            let held = (train_data.len() / 10).max(1);
            train_data.split_off(train_data.len() - held)
        }
    };
    info!("{} training and {} validation instances", train_data.len(), val_data.len());
    let to_samples = |v: Vec<LoadedInstance>| -> Vec<Sample> { v.into_iter().map(|i| Sample::new(i.a)).collect() };
    let train_set = to_samples(train_data);
    let val_set = to_samples(val_data);
    let cfg = TrainConfig {
        epochs: args.epochs,
        lr0: args.lr,
        clip_norm: args.clip,
        seed: args.seed,
        checkpoint: Some(args.out.clone()),
        ..TrainConfig::default()
    };
    let mut model = ModelParams::init(args.seed);
    let report = train(&mut model, &train_set, &val_set, &cfg)?;
    let meta = serde_json::json!({ "report": report, "config": cfg });
    save_model_with_metadata(&model, Some(meta), &args.out)?;
    println!(
        "epochs run {}, best epoch {}, validation loss {:.6e} -> {:.6e}",
        report.stopped_epoch,
        report.best_epoch,
        report.initial_val_loss,
        mean_loss(&model, &val_set)?
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let model = load_model_for(args.precond, args.model.as_deref())?;
    let a = read_matrix_market(&args.matrix)?;
    let b = match &args.rhs {
        Some(p) => read_vector(p)?,
        None => vec![1.0; a.n()],
    };
    let p = bench::build_preconditioner(args.precond, &a, model.as_ref())?;
    let cfg = SolveConfig {
        rtol: args.rtol,
        max_iters: args.max_iters,
        record_history: false,
    };
    let report = pcg_split(&a, &b, &p.l, &cfg)?;
    println!("precond        {}", args.precond);
    println!("n              {}", a.n());
    println!("iterations     {}", report.iterations);
    println!("converged      {}", report.converged);
    println!("residual       {:.3e}", report.true_relative_residual);
    println!("p_time         {:.6}", p.p_time);
    println!("cg_time        {:.6}", report.cg_time);
    if let Some(path) = &args.trace {
        let tcfg = TraceConfig {
            rtol: args.rtol,
            max_iters: args.max_iters,
            kappa: None,
        };
        let trace = convergence_trace(&a, &b, &p.l, None, &tcfg)?;
        write_trace_csv(&trace.rows, path)?;
        println!("kappa          {:.6e}", trace.kappa);
        println!("trace written to {}", path.display());
    }
    if !report.converged {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "no convergence after {} iterations ({:?})",
                report.iterations, report.termination
            ),
        });
    }
    Ok(())
}

fn run_bench_cmd(args: BenchArgs) -> Result<(), Failure> {
    let model = match &args.model {
        Some(p) => Some(load_model(p)?),
        None => None,
    };
    let preconds = match args.preconds {
        Some(list) => list,
        None => PrecondKind::ALL
            .into_iter()
            .filter(|&k| k != PrecondKind::NeuralIf || model.is_some())
            .collect(),
    };
    if preconds.contains(&PrecondKind::NeuralIf) && model.is_none() {
        return Err(usage("neuralif requires --model"));
    }
    let (_, instances) = load_dataset(&args.data)?;
    let cfg = BenchConfig {
        preconds,
        solve: SolveConfig {
            rtol: args.rtol,
            max_iters: None,
            record_history: false,
        },
        jobs: args.jobs,
        kappa: args.kappa.map(Into::into),
        ..BenchConfig::default()
    };
    let records = run_bench(&instances, &cfg, model.as_ref())?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    write_bench_csv(&records, args.out.join("bench.csv"))?;
    let summary = summarize(&records);
    let summary_path = args.out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    fs::write(&summary_path, text).map_err(|e| io_failure(&summary_path, e))?;
    println!(
        "{:<10} {:>9} {:>10} {:>10} {:>10} {:>10} {:>11}",
        "precond", "breakdown", "med iters", "med p", "med cg", "med total", "amortized"
    );
    for s in &summary {
        println!(
            "{:<10} {:>9} {:>10.1} {:>10.4} {:>10.4} {:>10.4} {:>11}",
            s.precond.name(),
            s.breakdowns,
            s.median_iterations,
            s.median_p_time,
            s.median_cg_time,
            s.median_total_time,
            s.amortized.map(|a| format!("{a}/{}", s.instances)).unwrap_or_else(|| "-".into())
        );
    }
    println!("{} records written to {}", records.len(), args.out.display());
    Ok(())
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let needs_model = args.precond.contains(&PrecondKind::NeuralIf);
    let model = load_model_for(
        if needs_model { PrecondKind::NeuralIf } else { PrecondKind::None },
        args.model.as_deref(),
    )?;
    let a = read_matrix_market(&args.matrix)?;
    let method: SpectrumMethod = args.eig.into();
    let mut reports = Vec::new();
    for &kind in &args.precond {
        let p = bench::build_preconditioner(kind, &a, model.as_ref())?;
        let r = spectrum(&a, Some(&p.l), method)?;
        println!(
            "{:<10} lambda_min {:.6e}  lambda_max {:.6e}  kappa {:.6e}{}",
            kind.name(),
            r.lambda_min,
            r.lambda_max,
            r.kappa,
            if r.converged { "" } else { "  (not converged)" }
        );
        reports.push((kind.name(), r));
    }
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let refs: Vec<(&str, &_)> = reports.iter().map(|(k, r)| (*k, r)).collect();
    let path = args.out.join("spectrum.csv");
    write_spectrum_csv(&refs, &path)?;
    println!("spectrum written to {}", path.display());
    Ok(())
}
