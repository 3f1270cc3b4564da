//! `conered`: conical-hull data reduction and endmember extraction.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use conered_core::dimred::reduce_dimension;
use conered_core::eval::{dict_distance, match_score, reconstruction_error, rho, DistanceMetric};
use conered_core::hottopixx::build_model_h;
use conered_core::io::{
    load_matrix, read_index_file, store_matrix, write_index_file, MatrixFormat, Sidecar,
};
use conered_core::lp::write_lp_text;
use conered_core::redic::{redic, sample_augmentation, RedicConfig, DEFAULT_GROUPS};
use conered_core::reduce::drs;
use conered_core::synth::{assemble, derive_whv, random_separable};
use conered_core::{Error, ErrorFamily, HsiMatrix, IndexSet, ToleranceConfig};

#[derive(Parser)]
#[command(name = "conered", version, about = "Conical-hull data reduction and endmember extraction")]
struct Cli {
    /// Worker threads for DRS groups and REDIC repetitions.
    #[arg(long, global = true, env = "CONERED_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a matrix to a cone-generating column subset (DRS).
    Reduce(ReduceArgs),
    /// Extract endmember signatures (REDIC).
    Extract(ExtractArgs),
    /// Compare estimated signatures against a reference.
    Eval(EvalArgs),
    /// Generate a synthetic nearly separable instance.
    Synth(SynthArgs),
    /// Print ρ(W) for a signature matrix.
    Rho(RhoArgs),
    /// Emit CSV sweeps over the noise level or the augmentation size.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// Matrix format of inputs and outputs (default: from the extension).
    #[arg(long)]
    format: Option<MatrixFormat>,
}

impl Common {
    fn format_for(&self, path: &Path) -> MatrixFormat {
        self.format.unwrap_or_else(|| MatrixFormat::from_path(path))
    }
}

#[derive(Args)]
struct ReduceArgs {
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    p: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps_feas: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reduce `Σ_r V_rᵀ` of the rank-`r` SVD instead of the matrix itself.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rank: Option<u64>,
    /// Index file to write (1-based, one per line).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExtractArgs {
    input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    r: u64,
    #[arg(long, default_value_t = 0)]
    lambda: usize,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    tau: u64,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    eps_feas: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_lp: f64,
    /// Output matrix for the averaged signatures.
    #[arg(long)]
    out: PathBuf,
    /// Report file (default: `<out>.report`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the first repetition's LP in CPLEX LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    /// Estimated signatures (omit when using --data/--indices).
    est: Option<PathBuf>,
    /// Reference signatures.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value = "mrsa")]
    metric: String,
    /// Data matrix whose columns are selected by --indices.
    #[arg(long, requires = "indices")]
    data: Option<PathBuf>,
    /// 1-based index file, e.g. from `reduce`.
    #[arg(long, requires = "data")]
    indices: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise intensity ‖A − WH‖₁.
    #[arg(long, default_value_t = 0.0, conflicts_with = "nu_rho")]
    nu: f64,
    /// Noise intensity as a multiple of ρ(W).
    #[arg(long)]
    nu_rho: Option<f64>,
    /// Derive the instance from a real image instead of sampling one.
    #[arg(long, requires = "ident")]
    from_real: Option<PathBuf>,
    /// Reference signatures for --from-real.
    #[arg(long)]
    ident: Option<PathBuf>,
    /// Output matrix; W, H and the sidecar are written next to it.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RhoArgs {
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(subcommand)]
    kind: SweepKind,
}

#[derive(Subcommand)]
enum SweepKind {
    /// Dictionary distance of the DRS output against ν.
    Nu(SweepNuArgs),
    /// Augmented dictionary distance and REDIC score against λ.
    Lambda(SweepLambdaArgs),
}

#[derive(Args)]
struct Instance {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GROUPS)]
    p: usize,
}

#[derive(Args)]
struct SweepNuArgs {
    #[command(flatten)]
    inst: Instance,
    /// Comma-separated noise levels.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4,1.5")]
    nus: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepLambdaArgs {
    #[command(flatten)]
    inst: Instance,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    /// Comma-separated augmentation sizes.
    #[arg(long, default_value = "0,2,4")]
    lambdas: String,
    /// Random K_add draws per λ.
    #[arg(long, default_value_t = 20)]
    draws: u64,
    #[arg(long, default_value_t = 1)]
    tau: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.family() {
            ErrorFamily::Usage => 2,
            ErrorFamily::Io => 3,
            ErrorFamily::Numerical => 4,
            ErrorFamily::Infeasible => 5,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match cli.command {
        Command::Reduce(a) => cmd_reduce(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Rho(a) => cmd_rho(a),
        Command::Sweep(a) => match a.kind {
            SweepKind::Nu(a) => cmd_sweep_nu(a),
            SweepKind::Lambda(a) => cmd_sweep_lambda(a),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path, common: &Common) -> Result<HsiMatrix, Failure> {
    load_matrix(path, common.format_for(path)).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// `dir/name.ext` → `dir/name.<tag>.ext`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{tag}.{ext}"),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn tolerances(eps_feas: f64, tol_lp: Option<f64>) -> Result<ToleranceConfig, Failure> {
    let mut tol = ToleranceConfig {
        eps_feas,
        ..Default::default()
    };
    if let Some(t) = tol_lp {
        tol.tol_lp = t;
    }
    tol.validate()?;
    Ok(tol)
}

fn one_based(idx: &[usize]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn print_stdout(text: &str) -> CliResult {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn cmd_reduce(args: ReduceArgs) -> CliResult {
    let start = Instant::now();
    let a = load(&args.input, &args.common)?;
    let tol = tolerances(args.eps_feas, None)?;
    if args.p == 0 {
        return Err(usage("--p must be at least 1"));
    }
    let target = match args.rank {
        Some(r) => reduce_dimension(&a, r as usize)?,
        None => a,
    };
    let k = drs(&target, args.p.min(target.ncols()), &tol, args.seed)?;
    let err = reconstruction_error(&target, &k)?;
    write_index_file(&k, &args.out)?;
    let mut text = String::new();
    writeln!(text, "k_size={}", k.len()).unwrap();
    writeln!(text, "reconstruction_error={err:e}").unwrap();
    print_stdout(&text)?;
    eprintln!("elapsed_seconds={:.3}", start.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> CliResult {
    let start = Instant::now();
    let a = load(&args.input, &args.common)?;
    let cfg = RedicConfig {
        r: args.r as usize,
        lambda: args.lambda,
        tau: args.tau as usize,
        p: args.p,
        seed: args.seed,
        tolerances: tolerances(args.eps_feas, Some(args.tol_lp))?,
    };
    if cfg.p == 0 {
        return Err(usage("--p must be at least 1"));
    }
    let est = redic(&a, &cfg)?;
    let out_format = args.common.format_for(&args.out);
    store_matrix(&est.w_hat, &args.out, out_format)?;

    let mut report = Sidecar::new();
    report
        .set("seed", cfg.seed)
        .set("r", cfg.r)
        .set("lambda", cfg.lambda)
        .set("tau", cfg.tau)
        .set("p", cfg.p)
        .set("k_size", est.k.len());
    for (j, idx) in est.selected_indices.iter().enumerate() {
        report.set(&format!("rep{}_indices", j + 1), one_based(idx));
    }
    let report_path = args.report.unwrap_or_else(|| with_suffix(&args.out, ".report"));
    report.write(&report_path)?;

    if let Some(lp_path) = &args.export_lp {
        let ap = reduce_dimension(&a, cfg.r)?;
        let add = sample_augmentation(&est.k, a.ncols(), cfg.lambda, cfg.seed, 0)?;
        let s = est.k.union(&add);
        let model = build_model_h(&ap.select_columns(s.as_slice())?, cfg.r)?;
        let mut file = std::io::BufWriter::new(fs::File::create(lp_path)?);
        write_lp_text(model.lp(), &mut file)?;
        file.flush()?;
    }

    let mut text = String::new();
    writeln!(text, "k_size={}", est.k.len()).unwrap();
    for (j, idx) in est.selected_indices.iter().enumerate() {
        writeln!(text, "rep{}_indices={}", j + 1, one_based(idx)).unwrap();
    }
    print_stdout(&text)?;
    eprintln!("elapsed_seconds={:.3}", start.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CliResult {
    let metric: DistanceMetric = args.metric.parse()?;
    let reference = load(&args.reference, &args.common)?;
    let mut text = String::new();
    let est = match (&args.est, &args.data, &args.indices) {
        (Some(path), None, None) => load(path, &args.common)?,
        (None, Some(data), Some(indices)) => {
            let a = load(data, &args.common)?;
            let k = read_index_file(indices)?;
            k.validate_for(a.ncols())?;
            let dist = dict_distance(&a, &k, &reference, metric)?;
            writeln!(text, "dict_distance={dist:.6}").unwrap();
            if k.len() != reference.ncols() {
                writeln!(text, "k_size={}", k.len()).unwrap();
                return print_stdout(&text);
            }
            a.select_columns(k.as_slice())?
        }
        _ => return Err(usage("give either an estimate file or both --data and --indices")),
    };
    let score = match_score(&reference, &est, metric)?;
    let per: Vec<String> = score.per_col.iter().map(|v| format!("{v:.6}")).collect();
    writeln!(text, "score={:.2}", score.score).unwrap();
    writeln!(text, "score_exact={:e}", score.score).unwrap();
    writeln!(text, "per_col={}", per.join(",")).unwrap();
    writeln!(text, "sigma={}", one_based(&score.sigma)).unwrap();
    print_stdout(&text)
}

fn cmd_synth(args: SynthArgs) -> CliResult {
    let (inst, seed) = match &args.from_real {
        Some(real) => {
            let a_real = load(real, &args.common)?;
            let ident_path = args.ident.as_ref().expect("clap enforces --ident");
            let ident = load(ident_path, &args.common)?;
            (derive_whv(&a_real, &ident)?, None)
        }
        None => (random_separable(args.d, args.n, args.r, args.seed)?, Some(args.seed)),
    };
    let nu = match args.nu_rho {
        Some(f) => f * rho(&inst.w)?,
        None if args.from_real.is_some() && args.nu == 0.0 => inst.nu,
        None => args.nu,
    };
    let a = assemble(&inst, nu)?;
    let fmt = args.common.format_for(&args.out);
    store_matrix(&a, &args.out, fmt)?;
    store_matrix(&inst.w, &sibling(&args.out, "w"), fmt)?;
    store_matrix(&inst.h, &sibling(&args.out, "h"), fmt)?;
    inst.sidecar(nu, seed).write(&with_suffix(&args.out, ".meta"))?;
    let mut text = String::new();
    writeln!(text, "nu={nu:e}").unwrap();
    writeln!(text, "pure_indices={}", one_based(&inst.pure_indices)).unwrap();
    print_stdout(&text)
}

fn cmd_rho(args: RhoArgs) -> CliResult {
    let w = load(&args.input, &args.common)?;
    print_stdout(&format!("rho={}\n", rho(&w)?))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, Failure> {
    raw.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| usage(format!("bad {what} value {t:?}"))))
        .collect()
}

fn cmd_sweep_nu(args: SweepNuArgs) -> CliResult {
    let nus: Vec<f64> = parse_list(&args.nus, "nu")?;
    let i = &args.inst;
    let inst = random_separable(i.d, i.n, i.r, i.seed)?;
    let tol = ToleranceConfig::default();
    let mut csv = String::from("nu,k_size,l1_distance,mrsa_distance,reconstruction_error\n");
    for nu in nus {
        let a = assemble(&inst, nu)?;
        let ap = reduce_dimension(&a, i.r)?;
        let k = drs(&ap, i.p.min(i.n), &tol, i.seed)?;
        let l1 = dict_distance(&a, &k, &inst.w, DistanceMetric::L1)?;
        let m = dict_distance(&a, &k, &inst.w, DistanceMetric::Mrsa)?;
        let err = reconstruction_error(&ap, &k)?;
        writeln!(csv, "{nu},{},{l1:.10},{m:.10},{err:e}", k.len()).unwrap();
    }
    fs::write(&args.out, csv)?;
    Ok(())
}

fn cmd_sweep_lambda(args: SweepLambdaArgs) -> CliResult {
    let lambdas: Vec<usize> = parse_list(&args.lambdas, "lambda")?;
    let i = &args.inst;
    let inst = random_separable(i.d, i.n, i.r, i.seed)?;
    let a = assemble(&inst, args.nu)?;
    let tol = ToleranceConfig::default();
    let ap = reduce_dimension(&a, i.r)?;
    let k = drs(&ap, i.p.min(i.n), &tol, i.seed)?;
    let mut csv = String::from("lambda,mean_l1_distance,mean_mrsa_distance,redic_score\n");
    for lambda in lambdas {
        let mut l1 = 0.0;
        let mut m = 0.0;
        for draw in 0..args.draws {
            let add = sample_augmentation(&k, i.n, lambda, i.seed, draw)?;
            let s: IndexSet = k.union(&add);
            l1 += dict_distance(&a, &s, &inst.w, DistanceMetric::L1)?;
            m += dict_distance(&a, &s, &inst.w, DistanceMetric::Mrsa)?;
        }
        let cfg = RedicConfig {
            lambda,
            tau: args.tau,
            p: i.p,
            seed: i.seed,
            ..RedicConfig::new(i.r)
        };
        let est = redic(&a, &cfg)?;
        let score = match_score(&inst.w, &est.w_hat, DistanceMetric::Mrsa)?.score;
        let draws = args.draws.max(1) as f64;
        writeln!(csv, "{lambda},{:.10},{:.10},{score:.10}", l1 / draws, m / draws).unwrap();
    }
    fs::write(&args.out, csv)?;
    Ok(())
}
