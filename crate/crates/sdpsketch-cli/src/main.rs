//! Command-line front end: generate instances, sketch problems, solve them,
//! derive value bounds, certify LMI infeasibility, and run benchmark suites.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 numerical failure. All
//! randomness flows from `--seed`; reruns with identical flags and seed
//! produce byte-identical output files (timings excepted, see `--no-timings`).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sdpsketch::bounds::{
    dual_norm_lower_bound, packing_bounds, upper_bound_on_original, DualNormBound, ValueBounds,
};
use sdpsketch::certify::{certify_infeasible, find_separator, CertifyOutcome};
use sdpsketch::error::Error as LibError;
use sdpsketch::jlt::{sample_from_config, Ensemble, SketchConfig};
use sdpsketch::linalg::{schatten_norm, SchattenP, SymMatrix};
use sdpsketch::model::{is_packing, LmiProblem, SketchableSdp, SketchedSdp};
use sdpsketch::sketch::sketch_sdp;
use sdpsketch::solver::{solve, SolveReport, SolveStatus, SolverOptions};

use sdpsketch_cli::experiment::{
    run_lemma31_experiment, run_lmi_experiment, run_value_experiment, ExperimentConfig, Family,
};
use sdpsketch_cli::gen::{
    generate_feasible_lmi, generate_infeasible_lmi, generate_packing_instance,
};
use sdpsketch_cli::report::write_csv;

#[derive(Parser)]
#[command(
    name = "sdpsketch",
    about = "Dimensionality reduction for SDPs and LMIs via seeded random conjugation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem instance with planted certificates.
    Generate(GenerateArgs),
    /// Reduce a problem's dimension with a seeded transform.
    Sketch(SketchArgs),
    /// Solve a problem with the built-in interior-point solver.
    Solve(SolveArgs),
    /// Derive value bounds for the original problem from a sketched solve.
    Bounds(BoundsArgs),
    /// Test LMI feasibility through a sketch; emit a certificate or witness.
    CertifyLmi(CertifyArgs),
    /// Run a seeded experiment suite and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance family.
    #[arg(long, value_enum)]
    family: GenerateFamily,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Number of constraints (packing) or generators (LMI).
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Rank of the random factors.
    #[arg(long, default_value_t = 4)]
    rank: usize,
    /// Trace bound enforced by the packing generator.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Planted separation margin for infeasible LMIs.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the certificates (defaults to `<out>.cert.json`).
    #[arg(long)]
    cert_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "kebab-case")]
enum GenerateFamily {
    Packing,
    InfeasibleLmi,
    FeasibleLmi,
}

#[derive(Args)]
struct SketchArgs {
    /// Problem JSON to reduce.
    input: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Trace bound certificate for an optimal primal point.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Declared rank budget (defaults to a worst-case budget from the data).
    #[arg(long)]
    k_budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = CliEnsemble::Gaussian)]
    ensemble: CliEnsemble,
    /// Nonzeros per column for the sparse ensemble.
    #[arg(long)]
    sparsity: Option<usize>,
    /// Constant in the dimension formula.
    #[arg(long, default_value_t = 8.0)]
    dim_constant: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the provenance record (defaults to
    /// `<out>.provenance.json`).
    #[arg(long)]
    provenance_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "kebab-case")]
enum CliEnsemble {
    Gaussian,
    Sparse,
}

impl From<CliEnsemble> for Ensemble {
    fn from(e: CliEnsemble) -> Self {
        match e {
            CliEnsemble::Gaussian => Ensemble::Gaussian,
            CliEnsemble::Sparse => Ensemble::Sparse,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON to solve.
    input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long)]
    out: PathBuf,
    /// Include the primal matrix in the report.
    #[arg(long)]
    dump_primal: bool,
    /// Include the dual multipliers in the report.
    #[arg(long)]
    dump_dual: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// Original problem JSON.
    #[arg(long)]
    problem: PathBuf,
    /// Sketched problem JSON (as written by `sketch`).
    #[arg(long)]
    sketched: PathBuf,
    /// Provenance record (defaults to `<sketched>.provenance.json`).
    #[arg(long)]
    provenance: Option<PathBuf>,
    /// Solve report of the sketched problem (`solve --dump-primal` output).
    #[arg(long)]
    report: PathBuf,
    /// Strictly feasible point JSON enabling the dual-norm lower bound.
    #[arg(long)]
    x0: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// LMI JSON to certify.
    input: PathBuf,
    /// Sketch accuracy; derived from a separator search when omitted.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Declared rank budget (defaults to (m + 2) * dim).
    #[arg(long)]
    k_budget: Option<usize>,
    #[arg(long, value_enum, default_value_t = CliEnsemble::Gaussian)]
    ensemble: CliEnsemble,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    /// Stamp the certificate with the current Unix time. Off by default so
    /// artifacts are byte-reproducible.
    #[arg(long)]
    timestamp: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long = "D", visible_alias = "dim", default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = CliEnsemble::Gaussian)]
    ensemble: CliEnsemble,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Oracle (original-problem) solve tolerance.
    #[arg(long, default_value_t = 1e-6)]
    oracle_tol: f64,
    /// Skip oracle solves above this ambient dimension.
    #[arg(long, default_value_t = 512)]
    oracle_dim_cap: usize,
    /// Force the sketch dimension (spike demo).
    #[arg(long)]
    force_d: Option<usize>,
    /// Derive epsilon from the planted separator (infeasible-lmi family).
    #[arg(long)]
    certified_epsilon: bool,
    /// Also report Schatten-2-normalized deviations (distortion families).
    #[arg(long)]
    hs2: bool,
    /// Zero out timing columns so the CSV is byte-reproducible.
    #[arg(long)]
    no_timings: bool,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON path (defaults to `<out>.summary.json`).
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<LibError> for CliError {
    fn from(e: LibError) -> Self {
        match e {
            LibError::NumericalFailure(_) | LibError::ConvergenceFailure(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn derived_path(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    base.with_file_name(name)
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let cert_out = args
        .cert_out
        .clone()
        .unwrap_or_else(|| derived_path(&args.out, ".cert.json"));
    match args.family {
        GenerateFamily::Packing => {
            let inst = generate_packing_instance(args.dim, args.m, args.rank, args.eta, args.seed);
            write_json(&args.out, &inst.problem)?;
            write_json(&cert_out, &inst.certificates)?;
        }
        GenerateFamily::InfeasibleLmi => {
            let planted = generate_infeasible_lmi(args.dim, args.m, args.tau, args.seed);
            write_json(&args.out, &planted.problem)?;
            #[derive(Serialize)]
            struct LmiCerts<'a> {
                tau: f64,
                k_budget: usize,
                separator: &'a SymMatrix,
            }
            write_json(
                &cert_out,
                &LmiCerts {
                    tau: planted.tau,
                    k_budget: planted.k_budget,
                    separator: &planted.separator,
                },
            )?;
        }
        GenerateFamily::FeasibleLmi => {
            let (problem, witness) = generate_feasible_lmi(args.dim, args.m, args.seed);
            write_json(&args.out, &problem)?;
            #[derive(Serialize)]
            struct Witness {
                witness_c: Vec<f64>,
            }
            write_json(&cert_out, &Witness { witness_c: witness })?;
        }
    }
    println!("wrote {} and {}", args.out.display(), cert_out.display());
    Ok(())
}

fn cmd_sketch(args: SketchArgs) -> Result<(), CliError> {
    let problem: SketchableSdp = read_json(&args.input)?;
    let k_budget = args
        .k_budget
        .unwrap_or((problem.num_constraints() + 2) * problem.dim());
    let mut config = SketchConfig::new(args.epsilon, args.delta, k_budget, args.eta, args.seed);
    config.ensemble = args.ensemble.into();
    config.sparsity = args.sparsity;
    config.dim_constant = args.dim_constant;
    config.validate(false).map_err(CliError::from)?;
    let transform = sample_from_config(&config, problem.dim())?;
    let sketched = sketch_sdp(&problem, &config, &transform)?;
    write_json(&args.out, &sketched.problem)?;
    let prov_out = args
        .provenance_out
        .clone()
        .unwrap_or_else(|| derived_path(&args.out, ".provenance.json"));
    write_json(&prov_out, &sketched.provenance)?;
    println!(
        "sketched {} -> {} (d = {}), provenance in {}",
        args.input.display(),
        args.out.display(),
        sketched.sketch_dim(),
        prov_out.display()
    );
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let problem: SketchableSdp = read_json(&args.input)?;
    let options = SolverOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        ..Default::default()
    };
    let mut report = solve(&problem, &options)?;
    if !args.dump_primal {
        report.primal = None;
    }
    if !args.dump_dual {
        report.dual = None;
    }
    write_json(&args.out, &report)?;
    println!(
        "status {:?}, value {:?}, {} iterations -> {}",
        report.status,
        report.value,
        report.iterations,
        args.out.display()
    );
    if report.status == SolveStatus::NumericalFailure {
        return Err(CliError::Numerical(
            "solver reported a numerical failure".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsOutput {
    #[serde(flatten)]
    bounds: ValueBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_norm_audit: Option<DualNormBound>,
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), CliError> {
    let problem: SketchableSdp = read_json(&args.problem)?;
    let sketched_problem: SketchableSdp = read_json(&args.sketched)?;
    let prov_path = args
        .provenance
        .clone()
        .unwrap_or_else(|| derived_path(&args.sketched, ".provenance.json"));
    let provenance: sdpsketch::model::SketchProvenance = read_json(&prov_path)?;
    let report: SolveReport = read_json(&args.report)?;
    if report.status != SolveStatus::Optimal {
        return Err(CliError::Numerical(format!(
            "bounds need an Optimal sketched report, got {:?}",
            report.status
        )));
    }
    let alpha_sketch = report
        .value
        .ok_or_else(|| CliError::Usage("report carries no value".into()))?;
    let base_rhs: Vec<f64> = sketched_problem
        .constraints
        .iter()
        .zip(provenance.constraint_trace_norms.iter())
        .map(|(c, n)| c.rhs - provenance.mu * n)
        .collect();
    let sketched = SketchedSdp {
        problem: sketched_problem,
        mu: provenance.mu,
        base_rhs,
        provenance: provenance.clone(),
    };

    let norm1_a = schatten_norm(&problem.objective, SchattenP::One)?;
    let upper = upper_bound_on_original(alpha_sketch, provenance.epsilon, provenance.eta, norm1_a);

    let packing = is_packing(&problem, 1e-9) && problem.constraints.iter().all(|c| c.rhs == 1.0);
    let bounds = if packing {
        packing_bounds(&problem, &sketched, &report)?
    } else {
        ValueBounds {
            upper,
            upper_provenance: sdpsketch::bounds::UpperBoundProvenance {
                alpha_sketch,
                epsilon: provenance.epsilon,
                eta: provenance.eta,
                objective_trace_norm: norm1_a,
            },
            lower: None,
            assumptions: vec![
                format!("trace bound eta = {}: supplied", provenance.eta),
                "rank budget k covers rank(X*) + rank(A) + sum rank(B_i): supplied".into(),
            ],
        }
    };
    let dual_norm_audit = match &args.x0 {
        Some(path) => {
            let x0: SymMatrix = read_json(path)?;
            Some(dual_norm_lower_bound(
                alpha_sketch,
                upper,
                &problem,
                &x0,
                provenance.epsilon,
                provenance.eta,
            )?)
        }
        None => None,
    };
    let output = BoundsOutput {
        bounds,
        dual_norm_audit,
    };
    write_json(&args.out, &output)?;
    println!("bounds written to {}", args.out.display());
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<(), CliError> {
    let lmi: LmiProblem = read_json(&args.input)?;
    let epsilon = match args.epsilon {
        Some(e) => e,
        None => match find_separator(&lmi, 1e-6)? {
            Some(cert) => {
                eprintln!(
                    "derived epsilon = {} from a separator with margin {}",
                    cert.certified_epsilon,
                    cert.constraint_margins
                        .iter()
                        .fold(f64::NEG_INFINITY, |a, b| a.max(*b))
                );
                cert.certified_epsilon
            }
            None => {
                return Err(CliError::Usage(
                    "no separator found; supply --epsilon explicitly (the guarantee is then \
                         conditional on the chosen accuracy)"
                        .into(),
                ))
            }
        },
    };
    let k_budget = args
        .k_budget
        .unwrap_or((lmi.num_generators() + 2) * lmi.dim());
    let mut config = SketchConfig::new(epsilon, args.delta, k_budget, 0.0, args.seed);
    config.ensemble = args.ensemble.into();
    let options = SolverOptions::with_tol(args.tol);
    let mut outcome = certify_infeasible(&lmi, &config, &options)?;
    if args.timestamp {
        if let CertifyOutcome::InfeasibleCertified(cert) = &mut outcome {
            cert.timestamp = Some(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            );
        }
    }
    write_json(&args.out, &outcome)?;
    match &outcome {
        CertifyOutcome::InfeasibleCertified(cert) => {
            println!(
                "infeasibility certified (t* = {}), certificate in {}",
                cert.t_star,
                args.out.display()
            );
        }
        CertifyOutcome::SketchFeasible { .. } => {
            println!(
                "sketched system is feasible; witness written to {} (original is feasible or \
                 close to feasible)",
                args.out.display()
            );
        }
        CertifyOutcome::Inconclusive { t_star } => {
            println!(
                "inconclusive (t* = {t_star} inside the reporting margin); no certificate emitted"
            );
        }
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::new(args.family);
    cfg.dim = args.dim;
    cfg.m = args.m;
    cfg.rank = args.rank;
    cfg.trials = args.trials;
    cfg.epsilon = args.epsilon;
    cfg.delta = args.delta;
    cfg.eta = args.eta;
    cfg.tau = args.tau;
    cfg.ensemble = args.ensemble.into();
    cfg.base_seed = args.seed;
    cfg.oracle_tol = args.oracle_tol;
    cfg.oracle_dim_cap = args.oracle_dim_cap;
    cfg.force_sketch_dim = args.force_d;
    cfg.use_certified_epsilon = args.certified_epsilon;
    cfg.compute_hs2 = cfg.compute_hs2 || args.hs2;
    cfg.collect_timings = !args.no_timings;

    let summary_out = args
        .summary_out
        .clone()
        .unwrap_or_else(|| derived_path(&args.out, ".summary.json"));
    let records = match args.family {
        Family::Packing => {
            let (records, summary) = run_value_experiment(&cfg);
            write_json(&summary_out, &summary)?;
            records
        }
        Family::InfeasibleLmi | Family::FeasibleLmi => {
            let (records, summary) = run_lmi_experiment(&cfg);
            write_json(&summary_out, &summary)?;
            records
        }
        Family::Lemma31Matrices | Family::SpikeDemo => {
            let (records, summary) = run_lemma31_experiment(&cfg);
            write_json(&summary_out, &summary)?;
            records
        }
    };
    let file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", args.out.display())))?;
    write_csv(std::io::BufWriter::new(file), &records)?;
    println!(
        "{} trials -> {} (summary in {})",
        records.len(),
        args.out.display(),
        summary_out.display()
    );
    Ok(())
}

fn configure_threads() {
    if let Ok(value) = std::env::var("SDPSKETCH_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn main() {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout; usage errors go to stderr.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Sketch(args) => cmd_sketch(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::CertifyLmi(args) => cmd_certify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            std::process::exit(2);
        }
    }
}
