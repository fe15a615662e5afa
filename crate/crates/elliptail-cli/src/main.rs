//! Command-line front end: simulation, parameter estimation, extreme
//! quantile/risk estimation, Monte-Carlo experiments, the real-data
//! pipeline and oracle spot checks.
//!
//! Exit codes: 0 on success, 1 on domain errors, 2 on I/O errors (clap
//! usage errors also exit 2). Every subcommand accepts `--json` for
//! machine-readable output and `--config <file>` to load its arguments from
//! a JSON document instead of flags; reports embed the resolved
//! configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use elliptail::data::{
    estimate_moments, load_returns, read_sample_matrix, real_data_pipeline, write_sample_matrix,
    PipelineOptions,
};
use elliptail::experiment::{asymptotic_variance_table, run as run_experiment, ExperimentPlan};
use elliptail::extremal::{
    estimate_extremal, ExtremalEstimate, HillConfig, HillMode, Kernel, KernelConfig,
};
use elliptail::oracle::{
    numeric_hg, numeric_lp_quantile, student_conditional_quantile, student_conditional_tvar,
    table1_coefficients, ConditionalStudentDensity,
};
use elliptail::quantile::{
    check_conditions, high_quantile, intermediate_quantile, MeasureKind, SequenceSchedule,
};
use elliptail::risk::{hg_estimate, lp_quantile_estimate};
use elliptail::{ConditionalMoments, EllipticalModel, Error, SampleMatrix};

#[derive(Parser)]
#[command(name = "elliptail", version, about = "Extreme conditional risk estimation for heavy-tailed elliptical vectors")]
struct Cli {
    /// Number of worker threads for parallel replicates (default: all
    /// cores; env ELLIPTAIL_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed override for the commands that sample (simulate, montecarlo);
    /// accepted everywhere, ignored by the deterministic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw i.i.d. samples from an elliptical model into headerless CSV.
    Simulate(SimulateArgs),
    /// Estimate the extremal parameters (γ̂, η̂, ĝ, ℓ̂) from a sample.
    EstimateParams(EstimateParamsArgs),
    /// Estimate an extreme conditional quantile.
    EstimateQuantile(EstimateArgs),
    /// Estimate an Lp-quantile or Haezendonck-Goovaerts measure.
    EstimateRisk(EstimateRiskArgs),
    /// Run a Monte-Carlo experiment plan.
    Montecarlo(MontecarloArgs),
    /// Full market-returns workflow: moments, extremal parameters, high
    /// quantile at an automatically chosen level.
    RealData(RealDataArgs),
    /// Closed-form and brute-force oracle spot checks.
    Oracle(OracleArgs),
}

#[derive(Args, Serialize, Deserialize)]
struct SimulateArgs {
    /// Model JSON file ({"family":"student","nu":2.0,"mu":[..],"sigma":[[..]]}).
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    model: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    seed: u64,
    /// Output CSV path ("-" for stdout).
    #[arg(long, default_value = "-")]
    #[serde(default = "default_stdout")]
    output: String,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    /// Load all arguments from a JSON file instead of flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn default_stdout() -> String {
    "-".into()
}

#[derive(Args, Serialize, Deserialize)]
struct SampleInputArgs {
    /// Headerless CSV sample matrix. For quantile/risk estimation the last
    /// column is the response when no model is given.
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    data: Option<PathBuf>,
    /// Covariate point x, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        required_unless_present = "config"
    )]
    #[serde(default)]
    x: Vec<f64>,
    /// Optional model JSON with known (mu, sigma); otherwise the method of
    /// moments is used on the data.
    #[arg(long)]
    #[serde(default)]
    model: Option<PathBuf>,
    /// k_n exponent: k = floor(n^b).
    #[arg(long, default_value_t = 0.6)]
    #[serde(default = "default_b")]
    b: f64,
    /// Bandwidth exponent: h = n^(-c).
    #[arg(long, default_value_t = 0.2)]
    #[serde(default = "default_c")]
    c: f64,
    /// Whitened component used by the Hill estimator.
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    component: usize,
    /// Hill statistic: "component" or "mahalanobis-norm".
    #[arg(long, default_value = "component")]
    #[serde(default = "default_mode")]
    mode: String,
    /// Kernel: gaussian, epanechnikov or uniform.
    #[arg(long, default_value = "gaussian")]
    #[serde(default = "default_kernel")]
    kernel: String,
}

fn default_b() -> f64 {
    0.6
}
fn default_c() -> f64 {
    0.2
}
fn default_mode() -> String {
    "component".into()
}
fn default_kernel() -> String {
    "gaussian".into()
}

#[derive(Args, Serialize, Deserialize)]
struct EstimateParamsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: SampleInputArgs,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize)]
struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: SampleInputArgs,
    /// Level exponent: α_n = 1 - n^(-a).
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    a: Option<f64>,
    /// Second-order index ρ < 0 (condition checks only).
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    #[serde(default = "default_rho")]
    rho: f64,
    /// Regime: auto (by sign of a-1), intermediate or high.
    #[arg(long, default_value = "auto")]
    #[serde(default = "default_regime")]
    regime: String,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn default_rho() -> f64 {
    -1.0
}
fn default_regime() -> String {
    "auto".into()
}

#[derive(Args, Serialize, Deserialize)]
struct EstimateRiskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    base: EstimateArgs,
    /// Measure tag: quantile, lp:<p> or hg:<p>.
    #[arg(long, default_value = "quantile", required_unless_present = "config")]
    #[serde(default = "default_measure")]
    measure: String,
}

fn default_measure() -> String {
    "quantile".into()
}

#[derive(Args, Serialize, Deserialize)]
struct MontecarloArgs {
    /// Experiment plan JSON (the full run configuration).
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    plan: Option<PathBuf>,
    /// Seed override for the plan's base_seed.
    #[arg(long)]
    #[serde(default)]
    seed: Option<u64>,
    /// Write the full report as JSON.
    #[arg(long)]
    #[serde(default)]
    out_json: Option<PathBuf>,
    /// Write tidy per-replicate CSV rows.
    #[arg(long)]
    #[serde(default)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize)]
struct RealDataArgs {
    /// Returns CSV with a header row.
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    data: Option<PathBuf>,
    /// Covariate column names, comma-separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "config")]
    #[serde(default)]
    covariates: Vec<String>,
    /// Target column name.
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    target: Option<String>,
    /// Covariate point; defaults to the last row (which is then excluded
    /// from the learning sample).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(default)]
    x: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.6)]
    #[serde(default = "default_b")]
    b: f64,
    #[arg(long, default_value_t = 0.2)]
    #[serde(default = "default_c")]
    c: f64,
    /// Level exponent; defaults to the variance-minimizing (1-b)·η̂.
    #[arg(long)]
    #[serde(default)]
    a: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    #[serde(default = "default_kernel")]
    kernel: String,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    component: usize,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize)]
struct OracleArgs {
    /// What to evaluate: table1, quantile, tvar, lp, hg or conditions.
    #[arg(long, required_unless_present = "config")]
    #[serde(default)]
    what: Option<String>,
    /// Family for table1: gaussian, student, ugm, slash.
    #[arg(long, default_value = "student")]
    #[serde(default = "default_family")]
    family: String,
    #[arg(long, default_value_t = 2.0)]
    #[serde(default = "default_nu")]
    nu: f64,
    /// Slash exponent.
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_one")]
    slash_a: f64,
    /// UGM weights / rates, comma-separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    weights: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    rates: Vec<f64>,
    /// Covariate dimension N.
    #[arg(long, default_value_t = 3)]
    #[serde(default = "default_n_dim")]
    n_dim: usize,
    /// Mahalanobis distance M(x).
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "default_one")]
    m: f64,
    #[arg(long, default_value_t = 0.99)]
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    #[serde(default = "default_p")]
    p: f64,
    /// Schedule exponents for `conditions` (a, b, c, rho, gamma).
    #[arg(long, default_value_t = 1.25)]
    #[serde(default = "default_a_exp")]
    a_exp: f64,
    #[arg(long, default_value_t = 0.6)]
    #[serde(default = "default_b")]
    b: f64,
    #[arg(long, default_value_t = 0.2)]
    #[serde(default = "default_c")]
    c: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    #[serde(default = "default_rho")]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[arg(long)]
    #[serde(default)]
    json: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

fn default_family() -> String {
    "student".into()
}
fn default_nu() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_n_dim() -> usize {
    3
}
fn default_alpha() -> f64 {
    0.99
}
fn default_p() -> f64 {
    2.0
}
fn default_a_exp() -> f64 {
    1.25
}
fn default_gamma() -> f64 {
    0.5
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads.or_else(|| {
        std::env::var("ELLIPTAIL_THREADS").ok().and_then(|v| v.parse().ok())
    }) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let seed = cli.seed;
    let outcome = match cli.command {
        Command::Simulate(args) => with_config(args, |a| &a.config, |mut a: SimulateArgs| {
            if let Some(s) = seed {
                a.seed = s;
            }
            cmd_simulate(a)
        }),
        Command::EstimateParams(args) => with_config(args, |a| &a.config, cmd_estimate_params),
        Command::EstimateQuantile(args) => with_config(args, |a| &a.config, cmd_estimate_quantile),
        Command::EstimateRisk(args) => with_config(args, |a| &a.base.config, cmd_estimate_risk),
        Command::Montecarlo(args) => with_config(args, |a| &a.config, |mut a: MontecarloArgs| {
            if a.seed.is_none() {
                a.seed = seed;
            }
            cmd_montecarlo(a)
        }),
        Command::RealData(args) => with_config(args, |a| &a.config, cmd_real_data),
        Command::Oracle(args) => with_config(args, |a| &a.config, cmd_oracle),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(if e.is_io() { 2 } else { 1 });
    }
}

/// When --config is present, re-read the argument struct from JSON (the
/// file fully determines the run).
fn with_config<A: DeserializeOwned>(
    args: A,
    config_of: impl Fn(&A) -> &Option<PathBuf>,
    run: impl Fn(A) -> Result<(), Error>,
) -> Result<(), Error> {
    let args = match config_of(&args) {
        Some(path) => serde_json::from_reader(std::fs::File::open(path)?)?,
        None => args,
    };
    run(args)
}

fn load_model(path: &Path) -> Result<EllipticalModel, Error> {
    Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
}

fn parse_kernel(name: &str) -> Result<Kernel, Error> {
    match name {
        "gaussian" => Ok(Kernel::Gaussian),
        "epanechnikov" => Ok(Kernel::Epanechnikov),
        "uniform" => Ok(Kernel::Uniform),
        other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
    }
}

fn parse_mode(name: &str) -> Result<HillMode, Error> {
    match name {
        "component" => Ok(HillMode::Component),
        "mahalanobis-norm" => Ok(HillMode::MahalanobisNorm),
        other => Err(Error::InvalidParameter(format!("unknown Hill mode '{other}'"))),
    }
}

fn missing(flag: &str) -> Error {
    Error::InvalidParameter(format!("{flag} is required (as a flag or in the config file)"))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let model = load_model(args.model.as_deref().ok_or_else(|| missing("--model"))?)?;
    let n = args.n.ok_or_else(|| missing("--n"))?;
    let samples = model.sample(n, args.seed)?;
    if args.output == "-" {
        let mut out = std::io::stdout().lock();
        write_sample_matrix(&mut out, &samples)?;
    } else {
        let mut out = std::fs::File::create(&args.output)?;
        write_sample_matrix(&mut out, &samples)?;
    }
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "n": n,
                "dim": model.dim(),
                "seed": args.seed,
                "output": args.output,
            })
        );
    } else if args.output != "-" {
        println!("wrote {n} rows x {} columns to {}", model.dim(), args.output);
    }
    Ok(())
}

/// Shared preparation: data + optional model -> (W statistic vector,
/// Mahalanobis distances, conditional moments, covariate dimension, n).
struct Prepared {
    w: Vec<f64>,
    m_values: Vec<f64>,
    cond: ConditionalMoments,
    n_dim: usize,
    n: usize,
}

fn prepare(input: &SampleInputArgs) -> Result<Prepared, Error> {
    let data = read_sample_matrix(input.data.as_deref().ok_or_else(|| missing("--data"))?)?;
    let mode = parse_mode(&input.mode)?;
    let (model, x_data): (EllipticalModel, SampleMatrix) = match &input.model {
        Some(path) => {
            let model = load_model(path)?;
            let d = model.dim();
            let x_data = if data.ncols() == d {
                data.split_last_column()?.0
            } else if data.ncols() == d - 1 {
                data.clone()
            } else {
                return Err(Error::DimensionMismatch(format!(
                    "data has {} columns, model dimension is {d}",
                    data.ncols()
                )));
            };
            (model, x_data)
        }
        None => {
            let (mu, sigma) = estimate_moments(&data)?;
            let model =
                EllipticalModel::new(elliptail::Family::Gaussian, mu, sigma)?;
            let x_data = data.split_last_column()?.0;
            (model, x_data)
        }
    };
    let n_dim = x_data.ncols();
    if input.x.len() != n_dim {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, expected N = {n_dim}",
            input.x.len()
        )));
    }
    let cond = model.conditional_moments(&input.x)?;
    let x_model = model.x_block(n_dim)?;
    let m_values = x_model.mahalanobis_distances(&x_data)?;
    let w = match mode {
        HillMode::Component => x_model.whitened_component(&x_data, input.component)?,
        HillMode::MahalanobisNorm => m_values.iter().map(|m| m.sqrt()).collect(),
    };
    Ok(Prepared { w, m_values, cond, n_dim, n: x_data.nrows() })
}

fn extremal_of(input: &SampleInputArgs, prep: &Prepared) -> Result<ExtremalEstimate, Error> {
    let k = ((prep.n as f64).powf(input.b) + 1e-9).floor() as usize;
    let k = k.clamp(1, prep.n.saturating_sub(1));
    let h = (prep.n as f64).powf(-input.c);
    estimate_extremal(
        &prep.w,
        &prep.m_values,
        prep.cond.m_x,
        &HillConfig { k, component_index: input.component, mode: parse_mode(&input.mode)? },
        &KernelConfig { bandwidth: h, kernel: parse_kernel(&input.kernel)? },
        prep.n_dim,
    )
}

fn cmd_estimate_params(args: EstimateParamsArgs) -> Result<(), Error> {
    let prep = prepare(&args.input)?;
    let est = extremal_of(&args.input, &prep)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({ "config": &args, "m_x": prep.cond.m_x, "estimate": est })
        );
    } else {
        println!(
            "n = {}, k = {}, h = {:.6}, M(x) = {:.6}",
            est.n, est.k, est.h, prep.cond.m_x
        );
        println!(
            "gamma = {:.6}, eta = {:.6} (se {:.6}), g = {:.6e}, ell = {:.6} (se {:.6}, regime {:?})",
            est.gamma_hat, est.eta_hat, est.se_eta, est.g_hat, est.ell_hat, est.se_ell, est.regime
        );
    }
    Ok(())
}

fn estimate_quantile_inner(
    args: &EstimateArgs,
) -> Result<(elliptail::RiskEstimate, ExtremalEstimate, SequenceSchedule), Error> {
    let prep = prepare(&args.input)?;
    let est = extremal_of(&args.input, &prep)?;
    let a = args.a.ok_or_else(|| missing("--a"))?;
    let schedule = SequenceSchedule::new(
        a,
        args.input.b,
        args.input.c,
        args.rho,
        est.gamma_hat,
        prep.n_dim,
    )?;
    let high = match args.regime.as_str() {
        "auto" => a > 1.0,
        "high" => true,
        "intermediate" => false,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown regime '{other}' (auto, intermediate or high)"
            )))
        }
    };
    let risk = if high {
        high_quantile(&prep.w, &prep.cond, &est, &schedule)?
    } else {
        intermediate_quantile(&prep.w, &prep.cond, &est, &schedule)?
    };
    Ok((risk, est, schedule))
}

fn print_risk(risk: &elliptail::RiskEstimate) {
    println!(
        "{} at level {:.8} ({:?}): {:.6} [95% CI {:.6}, {:.6}]",
        risk.kind.tag(),
        risk.level,
        risk.regime,
        risk.value,
        risk.ci_low,
        risk.ci_high
    );
    for w in &risk.warnings {
        println!("warning: {w}");
    }
}

fn cmd_estimate_quantile(args: EstimateArgs) -> Result<(), Error> {
    let (risk, est, _) = estimate_quantile_inner(&args)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({ "config": &args, "extremal": est, "risk": risk })
        );
    } else {
        print_risk(&risk);
    }
    Ok(())
}

fn cmd_estimate_risk(args: EstimateRiskArgs) -> Result<(), Error> {
    let measure = MeasureKind::parse(&args.measure)?;
    let (base, est, schedule) = estimate_quantile_inner(&args.base)?;
    let risk = match measure {
        MeasureKind::Quantile => base,
        MeasureKind::LpQuantile(p) => lp_quantile_estimate(&base, &est, p, schedule.n_dim)?,
        MeasureKind::HaezendonckGoovaerts(p) => hg_estimate(&base, &est, p, schedule.n_dim)?,
    };
    if args.base.json {
        println!(
            "{}",
            serde_json::json!({ "config": &args, "extremal": est, "risk": risk })
        );
    } else {
        print_risk(&risk);
    }
    Ok(())
}

fn cmd_montecarlo(args: MontecarloArgs) -> Result<(), Error> {
    let plan_path = args.plan.as_deref().ok_or_else(|| missing("--plan"))?;
    let mut plan: ExperimentPlan = serde_json::from_reader(std::fs::File::open(plan_path)?)?;
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    let report = run_experiment(&plan)?;
    if let Some(path) = &args.out_json {
        serde_json::to_writer_pretty(std::fs::File::create(path)?, &report)?;
    }
    if let Some(path) = &args.out_csv {
        report.write_csv(std::fs::File::create(path)?)?;
    }
    if args.json {
        println!("{}", serde_json::to_string(&report)?);
    } else {
        let (v_int, v_high) =
            asymptotic_variance_table(&plan.schedule, plan.schedule.gamma_ref, plan.schedule.n_dim);
        println!(
            "asymptotic variances at gamma_ref: intermediate {v_int:.6e}, high {v_high:.6e}"
        );
        for cell in &report.cells {
            println!(
                "n = {:>9}  {:<9} alpha = {:.10}  oracle = {:>12.5}  zeta_hat = {:>12}  m_n = {:>3}/{}  failed = {}",
                cell.n,
                cell.measure.tag(),
                cell.alpha,
                cell.oracle,
                cell.empirical_variance
                    .map(|v| format!("{v:.6e}"))
                    .unwrap_or_else(|| "n/a".into()),
                cell.coverage_count,
                report.plan.replicates,
                cell.failed_replicates.len()
            );
        }
    }
    Ok(())
}

fn cmd_real_data(args: RealDataArgs) -> Result<(), Error> {
    let data = args.data.as_deref().ok_or_else(|| missing("--data"))?;
    let target = args.target.as_deref().ok_or_else(|| missing("--target"))?;
    if args.covariates.is_empty() {
        return Err(missing("--covariates"));
    }
    let table = load_returns(data, &args.covariates, target)?;
    let n_total = table.nrows();
    let (learning, x) = match &args.x {
        Some(x) => (table.matrix(&table.names)?, x.clone()),
        None => {
            if n_total < 3 {
                return Err(Error::InvalidParameter(
                    "need at least 3 rows to split off the evaluation day".into(),
                ));
            }
            let full = table.matrix(&table.names)?;
            let x = full.row(n_total - 1)[..args.covariates.len()].to_vec();
            (table.head(n_total - 1).matrix(&table.names)?, x)
        }
    };
    let opts = PipelineOptions {
        b: args.b,
        c: args.c,
        a: args.a,
        kernel: Some(parse_kernel(&args.kernel)?),
        component_index: args.component,
        rho: None,
    };
    let out = real_data_pipeline(&learning, &x, &opts)?;
    if args.json {
        println!("{}", serde_json::json!({ "config": &args, "outcome": out }))
    } else {
        println!(
            "n = {}, M(x) = {:.6}, a = {:.6}, alpha_n = {:.7}",
            out.n, out.m_x, out.a_resolved, out.alpha
        );
        println!(
            "eta = {:.6} (se {:.6}), ell = {:.5} (se {:.5})",
            out.extremal.eta_hat, out.extremal.se_eta, out.extremal.ell_hat, out.extremal.se_ell
        );
        // Returns are decimals; display as percent with 6 significant digits.
        println!(
            "high quantile of the return: {:.6}% [95% CI {:.6}%, {:.6}%]",
            out.risk.value * 100.0,
            out.risk.ci_low * 100.0,
            out.risk.ci_high * 100.0
        );
        for w in &out.risk.warnings {
            println!("warning: {w}");
        }
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Error> {
    match args.what.as_deref().unwrap_or("") {
        "table1" => {
            let family = match args.family.as_str() {
                "gaussian" => elliptail::Family::Gaussian,
                "student" => elliptail::Family::Student { nu: args.nu },
                "slash" => elliptail::Family::Slash { a: args.slash_a },
                "ugm" => elliptail::Family::Ugm {
                    weights: args.weights.clone(),
                    rates: args.rates.clone(),
                },
                other => {
                    return Err(Error::InvalidParameter(format!("unknown family '{other}'")))
                }
            };
            let coeffs = table1_coefficients(&family, args.n_dim, args.m)?;
            if args.json {
                println!("{}", serde_json::json!({ "config": &args, "coefficients": coeffs }));
            } else {
                println!("eta = {:.6}, ell = {:.6}", coeffs.eta, coeffs.ell);
            }
        }
        "quantile" => {
            let v = student_conditional_quantile(args.nu, args.n_dim, args.m, args.alpha)?;
            print_simple(&args, "conditional quantile", v)?;
        }
        "tvar" => {
            let v = student_conditional_tvar(args.nu, args.n_dim, args.m, args.alpha)?;
            print_simple(&args, "conditional TVaR", v)?;
        }
        "lp" => {
            let d = ConditionalStudentDensity { nu: args.nu, n_dim: args.n_dim, m_x: args.m };
            let v = numeric_lp_quantile(&d, args.alpha, args.p)?;
            print_simple(&args, "numeric Lp-quantile", v)?;
        }
        "hg" => {
            let d = ConditionalStudentDensity { nu: args.nu, n_dim: args.n_dim, m_x: args.m };
            let v = numeric_hg(&d, args.alpha, args.p)?;
            print_simple(&args, "numeric H-G measure", v)?;
        }
        "conditions" => {
            let schedule = SequenceSchedule::new(
                args.a_exp, args.b, args.c, args.rho, args.gamma, args.n_dim,
            )?;
            let report = check_conditions(&schedule);
            if args.json {
                println!("{}", serde_json::json!({ "config": &args, "report": report }));
            } else {
                for e in &report.entries {
                    println!(
                        "({}) {}: {}",
                        e.name,
                        if e.satisfied { "pass" } else { "FAIL" },
                        e.detail
                    );
                }
                if report.degenerate_theta {
                    println!("note: a+b = 1, theta undefined");
                }
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown oracle '{other}' (table1, quantile, tvar, lp, hg, conditions)"
            )))
        }
    }
    Ok(())
}

fn print_simple(args: &OracleArgs, label: &str, v: f64) -> Result<(), Error> {
    if args.json {
        println!("{}", serde_json::json!({ "config": args, "value": v }));
    } else {
        println!("{label} at alpha = {}: {v:.8}", args.alpha);
    }
    Ok(())
}
