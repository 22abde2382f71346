use crate::output::{sink, write_json, SCHEMA_VERSION};
use crate::theta_file::{psi_json, read_param_file, theta_json, ParamFile};
use anyhow::{anyhow, bail, Context};
use clap::{Args, ValueEnum};
use egse::data_io::{summarize, write_csv};
use egse::gof::residual_report;
use egse::links::parse_link_list;
use egse::marginals::selection_conditional_logpdf;
use egse::moments::kl_divergence_mc;
use egse::sampler::sample_egse;
use egse::*;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Flags shared by the verbs that evaluate a given model.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Parameter file (theta JSON or a fit.json)
    #[arg(long, value_name = "FILE")]
    pub theta: PathBuf,
    /// Comma-separated link tokens, one per coordinate (use `;` between parameterized links)
    #[arg(long, value_name = "LINKS")]
    pub link: String,
    /// `normal` or `student:<nu>`; defaults to `nu` in the parameter file, else normal
    #[arg(long, value_name = "KIND")]
    pub generator: Option<String>,
}

impl ModelArgs {
    fn load(&self) -> anyhow::Result<(Theta, Vec<LinkSpec>)> {
        let file = read_param_file(&self.theta, self.generator.as_deref())?;
        let links = links_for(&self.link, file.theta.dim())?;
        Ok((file.theta, links))
    }
}

/// Flags shared by the verbs that read a data file.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Comma-separated column names; all columns when omitted
    #[arg(long, value_name = "COLS", value_delimiter = ',')]
    pub cols: Vec<String>,
    /// Divide (0,1)-domain columns by 100
    #[arg(long)]
    pub percent: bool,
}

impl DataArgs {
    fn columns(&self) -> anyhow::Result<Vec<String>> {
        if !self.cols.is_empty() {
            return Ok(self.cols.clone());
        }
        let mut reader = csv::Reader::from_path(&self.data).map_err(|e| anyhow!("{}: {e}", self.data.display()))?;
        Ok(reader.headers()?.iter().map(|h| h.trim().to_string()).collect())
    }

    fn load(&self, links: &[LinkSpec]) -> anyhow::Result<Dataset> {
        let cols = self.columns()?;
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        Ok(load_csv(&self.data, &names, links, &LoadOptions { percent: self.percent })?)
    }
}

fn links_for(token: &str, n: usize) -> anyhow::Result<Vec<LinkSpec>> {
    let links = parse_link_list(token)?;
    if links.len() != n {
        bail!("{} links given for a {n}-dimensional model", links.len());
    }
    Ok(links)
}

fn check_index(i: usize, n: usize, flag: &str) -> anyhow::Result<usize> {
    if i == 0 || i > n {
        bail!("{flag} must be between 1 and {n}, got {i}");
    }
    Ok(i - 1)
}

#[derive(Debug, Args)]
pub struct PdfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Output CSV (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn pdf(args: &PdfArgs) -> anyhow::Result<()> {
    let (theta, links) = args.model.load()?;
    let data = args.data.load(&links)?;
    let prepared = theta.prepare()?;
    let values: Vec<f64> = data.rows().map(|y| prepared.egse_logpdf(y, &links)).collect::<Result<_>>()?;
    write_csv(sink(args.out.as_deref())?, &["logpdf".to_string()], values.into_iter().map(|v| vec![v]))?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of draws
    #[arg(short, value_name = "M")]
    pub m: usize,
    /// Random seed
    #[arg(long)]
    pub seed: u64,
    /// Output CSV (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn sample(args: &SampleArgs) -> anyhow::Result<()> {
    let (theta, links) = args.model.load()?;
    let batch = sample_egse(&theta, &links, args.m, args.seed)?;
    let header: Vec<String> = (1..=theta.dim()).map(|i| format!("y{i}")).collect();
    write_csv(sink(args.out.as_deref())?, &header, batch.rows().map(<[f64]>::to_vec))?;
    Ok(())
}

/// Flags shared by `fit` and `profile`.
#[derive(Debug, Args)]
pub struct EstimationArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated link tokens, one per column
    #[arg(long, value_name = "LINKS")]
    pub link: String,
    /// Fix tau at this value instead of estimating it
    #[arg(long)]
    pub tau: Option<f64>,
    /// Maximum optimizer iterations per start
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Use only the moment-based starting point
    #[arg(long)]
    pub single_start: bool,
    /// Accepted for scripting symmetry; fitting is deterministic
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output JSON (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

impl EstimationArgs {
    fn setup(&self) -> anyhow::Result<(Dataset, Vec<LinkSpec>, FitOptions)> {
        let links = parse_link_list(&self.link)?;
        let data = self.data.load(&links)?;
        let opts = FitOptions {
            tau_fixed: self.tau,
            max_iter: self.max_iter,
            multi_start: !self.single_start,
            ..FitOptions::default()
        };
        Ok((data, links, opts))
    }
}

fn fit_json(fit: &FitResult, data: &Dataset, links: &[LinkSpec], tau_fixed: Option<f64>) -> anyhow::Result<Value> {
    let named = |values: &[f64]| -> Value {
        let map: Map<String, Value> = fit.param_names.iter().cloned().zip(values.iter().map(|v| json!(v))).collect();
        Value::Object(map)
    };
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "theta": theta_json(&fit.theta_hat),
        "psi": psi_json(&fit.theta_hat)?,
        "estimates": named(&fit.estimates),
        "se": fit.std_errors.as_deref().map_or(Value::Null, named),
        "loglik": fit.loglik,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "grad_norm": fit.grad_norm,
        "fallback_used": fit.fallback_used,
        "message": fit.message,
        "generator": fit.theta_hat.kind.to_string(),
        "links": links,
        "columns": data.column_names(),
        "rows": data.nrows(),
        "tau_fixed": tau_fixed,
    });
    if !fit.nu_profile.is_empty() {
        v["nu_profile"] = fit.nu_profile.iter().map(|&(nu, ll)| json!({ "nu": nu, "loglik": ll })).collect();
    }
    Ok(v)
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// `normal` or `student:<nu>`
    #[arg(long, value_name = "KIND", default_value = "normal")]
    pub generator: String,
}

pub fn fit(args: &FitArgs) -> anyhow::Result<()> {
    let (data, links, opts) = args.est.setup()?;
    let kind: GeneratorKind = args.generator.parse()?;
    let fit = fit_mle(&data, &links, kind, &opts)?;
    if !fit.converged {
        log::warn!("{}", fit.message);
    }
    write_json(args.est.out.as_deref(), &fit_json(&fit, &data, &links, opts.tau_fixed)?)
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub est: EstimationArgs,
    /// Smallest degrees of freedom on the integer grid
    #[arg(long, default_value_t = 1)]
    pub nu_min: u32,
    /// Largest degrees of freedom on the integer grid
    #[arg(long, default_value_t = 50)]
    pub nu_max: u32,
}

pub fn profile(args: &ProfileArgs) -> anyhow::Result<()> {
    if args.nu_min == 0 || args.nu_min > args.nu_max {
        bail!("need 1 <= --nu-min <= --nu-max, got {}..{}", args.nu_min, args.nu_max);
    }
    let (data, links, mut opts) = args.est.setup()?;
    opts.nu_grid = (args.nu_min..=args.nu_max).map(f64::from).collect();
    let fit = profile_nu(&data, &links, &opts)?;
    write_json(args.est.out.as_deref(), &fit_json(&fit, &data, &links, opts.tau_fixed)?)
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Coordinate, starting at 1
    #[arg(short, value_name = "I")]
    pub i: usize,
    /// Probability in (0, 1)
    #[arg(short, value_name = "P")]
    pub p: f64,
}

pub fn quantile(args: &QuantileArgs) -> anyhow::Result<()> {
    let (theta, links) = args.model.load()?;
    let i = check_index(args.i, theta.dim(), "-i")?;
    let q = marginal_quantile(args.p, i, &theta, &links)?;
    write_json(None, &json!({ "schema_version": SCHEMA_VERSION, "i": args.i, "p": args.p, "quantile": q }))
}

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Selection threshold on coordinate j
    #[arg(long)]
    pub kappa: f64,
    /// Coordinate whose density is evaluated, starting at 1
    #[arg(short, value_name = "I")]
    pub i: usize,
    /// Coordinate carrying the selection event Y_j > kappa
    #[arg(short, value_name = "J")]
    pub j: usize,
    /// Number of grid points
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Output CSV (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn conditional(args: &ConditionalArgs) -> anyhow::Result<()> {
    let (theta, links) = args.model.load()?;
    let n = theta.dim();
    let (i, j) = (check_index(args.i, n, "-i")?, check_index(args.j, n, "-j")?);
    if i == j {
        bail!("-i and -j must differ");
    }
    if args.points < 2 {
        bail!("--points must be at least 2");
    }
    let k = args.points as f64;
    let grid: Vec<f64> = if links[i].domain() == Domain::Unit {
        (0..args.points).map(|t| (t as f64 + 0.5) / k).collect()
    } else {
        let lo = marginal_quantile(0.001, i, &theta, &links)?;
        let hi = marginal_quantile(0.999, i, &theta, &links)?;
        (0..args.points).map(|t| lo + (hi - lo) * t as f64 / (k - 1.0)).collect()
    };
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|&y| Ok(vec![y, selection_conditional_logpdf(y, i, j, args.kappa, &theta, &links)?.exp()]))
        .collect::<Result<_>>()?;
    write_csv(sink(args.out.as_deref())?, &["y".to_string(), "pdf".to_string()], rows.into_iter())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimatorChoice {
    /// Closed form when every link is `log` and the family is normal, Monte Carlo otherwise
    Auto,
    Closed,
    Mc,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated nonnegative exponents, one per coordinate
    #[arg(long, value_name = "EXPONENTS", value_delimiter = ',', required = true)]
    pub m: Vec<u32>,
    #[arg(long, value_enum, default_value_t = EstimatorChoice::Auto)]
    pub estimator: EstimatorChoice,
    /// Monte Carlo sample size
    #[arg(long, default_value_t = 100_000)]
    pub mc_size: usize,
    /// Random seed; required by the Monte Carlo estimator
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn moment(args: &MomentArgs) -> anyhow::Result<Option<String>> {
    let (theta, links) = args.model.load()?;
    let closed_ok = theta.kind.is_gaussian() && links.iter().all(|l| matches!(l.kind(), LinkKind::Log));
    let estimator = match args.estimator {
        EstimatorChoice::Closed => MomentEstimator::ClosedFormLogLink,
        EstimatorChoice::Mc => MomentEstimator::MonteCarlo,
        EstimatorChoice::Auto if closed_ok => MomentEstimator::ClosedFormLogLink,
        EstimatorChoice::Auto => MomentEstimator::MonteCarlo,
    };
    let seed = match (estimator, args.seed) {
        (MomentEstimator::MonteCarlo, None) => return Ok(Some("the Monte Carlo estimator requires --seed".into())),
        (_, s) => s.unwrap_or(0),
    };
    let req = MomentRequest {
        exponents: args.m.clone(),
        estimator,
        mc_size: args.mc_size,
        seed,
    };
    let est = mc_moment(&req, &theta, &links)?;
    write_json(None, &estimate_json(&est))?;
    Ok(None)
}

fn estimate_json(est: &Estimate) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "estimate": est.estimate,
        "stderr": est.stderr,
        "method": est.method,
    })
}

#[derive(Debug, Args)]
pub struct KlArgs {
    /// Parameter file of the reference model
    #[arg(long, value_name = "FILE")]
    pub theta1: PathBuf,
    /// Parameter file of the approximating model
    #[arg(long, value_name = "FILE")]
    pub theta2: PathBuf,
    /// `normal` or `student:<nu>` for both models; defaults to each file's `nu`
    #[arg(long, value_name = "KIND")]
    pub generator: Option<String>,
    /// Monte Carlo sample size
    #[arg(long, default_value_t = 100_000)]
    pub mc_size: usize,
    /// Random seed
    #[arg(long)]
    pub seed: u64,
}

pub fn kl(args: &KlArgs) -> anyhow::Result<()> {
    let a = read_param_file(&args.theta1, args.generator.as_deref())?;
    let b = read_param_file(&args.theta2, args.generator.as_deref())?;
    let est = kl_divergence_mc(&a.theta, &b.theta, args.mc_size, args.seed)?;
    write_json(None, &estimate_json(&est))
}

#[derive(Debug, Args)]
pub struct GofArgs {
    /// Fit file written by `egse fit` or `egse profile`
    #[arg(long, value_name = "FILE")]
    pub fit: PathBuf,
    /// CSV file with a header row
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Comma-separated column names; defaults to the fit file's columns
    #[arg(long, value_name = "COLS", value_delimiter = ',')]
    pub cols: Vec<String>,
    /// Comma-separated link tokens; defaults to the fit file's links
    #[arg(long, value_name = "LINKS")]
    pub link: Option<String>,
    /// Divide (0,1)-domain columns by 100
    #[arg(long)]
    pub percent: bool,
    /// Use the marginal CDF for every coordinate instead of the conditional chain
    #[arg(long)]
    pub marginal_only: bool,
    /// Write normal QQ pairs (theoretical, sample) to this CSV
    #[arg(long, value_name = "FILE")]
    pub qq: Option<PathBuf>,
    /// Seed recorded with the residuals
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn gof(args: &GofArgs) -> anyhow::Result<()> {
    let ParamFile { theta, links, columns } = read_param_file(&args.fit, None)?;
    let links = match (&args.link, links) {
        (Some(token), _) => links_for(token, theta.dim())?,
        (None, Some(l)) => l,
        (None, None) => bail!("{} has no `links`; pass --link", args.fit.display()),
    };
    let cols = match (args.cols.is_empty(), columns) {
        (false, _) => args.cols.clone(),
        (true, Some(c)) => c,
        (true, None) => bail!("{} has no `columns`; pass --cols", args.fit.display()),
    };
    let data = DataArgs {
        data: args.data.clone(),
        cols,
        percent: args.percent,
    }
    .load(&links)?;
    let report = residual_report(&data, &theta, &links, args.seed, args.marginal_only)?;
    if let Some(path) = &args.qq {
        let pairs = qq_points(&report.residuals)?;
        write_csv(
            sink(Some(path))?,
            &["theoretical".to_string(), "sample".to_string()],
            pairs.into_iter().map(|(t, s)| vec![t, s]),
        )?;
    }
    write_json(
        args.out.as_deref(),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "ks_stat": report.ks_stat,
            "ks_pvalue": report.ks_pvalue,
            "ad_stat": report.ad_stat,
            "ad_pvalue": report.ad_pvalue,
            "clamped": report.clamped,
            "marginal_only": args.marginal_only,
            "seed": report.seed,
            "residuals": report.residuals,
        }),
    )
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Scenario JSON; every field is optional and defaults to the standard scenario
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override the scenario's base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the number of replications per cell
    #[arg(long)]
    pub replications: Option<usize>,
    /// Report CSV (stdout when omitted)
    #[arg(short, long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn read_scenario(path: Option<&Path>) -> anyhow::Result<StudyScenario> {
    match path {
        None => Ok(StudyScenario::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| anyhow!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("bad scenario in {}", p.display()))
        }
    }
}

pub fn study(args: &StudyArgs) -> anyhow::Result<()> {
    let mut scenario = read_scenario(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        scenario.base_seed = seed;
    }
    if let Some(r) = args.replications {
        scenario.replications = r;
    }
    let report = run_study(&scenario)?;
    let mut out = sink(args.out.as_deref())?;
    report.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Comma-separated column names; all columns when omitted
    #[arg(long, value_name = "COLS", value_delimiter = ',')]
    pub cols: Vec<String>,
}

pub fn summarize_cmd(args: &SummarizeArgs) -> anyhow::Result<()> {
    let source = DataArgs {
        data: args.data.clone(),
        cols: args.cols.clone(),
        percent: false,
    };
    let n = source.columns()?.len();
    let data = source.load(&vec![LinkSpec::identity(); n])?;
    let columns = summarize(&data)?;
    for c in columns.iter().filter(|c| c.degenerate) {
        log::warn!("column {} has zero variance", c.name);
    }
    write_json(None, &json!({ "schema_version": SCHEMA_VERSION, "columns": columns }))
}
