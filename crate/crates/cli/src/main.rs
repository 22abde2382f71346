mod commands;
mod output;
mod theta_file;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use commands::*;
use egse::EgseError;
use serde_json::json;
use std::process::ExitCode;

/// Extended G-skew-elliptical distributions: densities, sampling, estimation and diagnostics.
#[derive(Debug, Parser)]
#[command(name = "egse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Log-density of each row of a CSV file
    Pdf(PdfArgs),
    /// Draw from a model
    Sample(SampleArgs),
    /// Maximum-likelihood fit
    Fit(FitArgs),
    /// Profile the Student degrees of freedom over an integer grid
    Profile(ProfileArgs),
    /// Marginal quantile of one coordinate
    Quantile(QuantileArgs),
    /// Density of Y_i given the selection event Y_j > kappa, on a grid
    Conditional(ConditionalArgs),
    /// Mixed moment E[prod Y_i^m_i]
    Moment(MomentArgs),
    /// Kullback-Leibler divergence between two models
    Kl(KlArgs),
    /// Quantile residuals with KS and AD tests for a fitted model
    Gof(GofArgs),
    /// Monte Carlo recovery study
    Study(StudyArgs),
    /// Summary statistics of data columns
    Summarize(SummarizeArgs),
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<EgseError>() {
        Some(EgseError::Domain { .. } | EgseError::DataDomain { .. }) => "domain",
        Some(EgseError::Argument(_)) => "argument",
        Some(EgseError::Matrix(_)) => "matrix",
        Some(EgseError::Progress(_)) => "sampler",
        Some(EgseError::Numeric(_)) => "numeric",
        Some(EgseError::Unsupported(_)) => "unsupported",
        Some(EgseError::Io(_)) => "io",
        None => "runtime",
    }
}

fn report(kind: &str, message: String, code: u8) -> ExitCode {
    let body = json!({ "schema_version": output::SCHEMA_VERSION, "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("EGSE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("EGSE_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => return report("usage", e.render().to_string().trim_end().to_string(), 2),
    };
    if let Err(msg) = configure_threads() {
        return report("usage", msg, 2);
    }
    let result = match &cli.command {
        Command::Pdf(a) => pdf(a),
        Command::Sample(a) => sample(a),
        Command::Fit(a) => fit(a),
        Command::Profile(a) => profile(a),
        Command::Quantile(a) => quantile(a),
        Command::Conditional(a) => conditional(a),
        Command::Moment(a) => match moment(a) {
            Ok(Some(usage)) => return report("usage", usage, 2),
            other => other.map(|_| ()),
        },
        Command::Kl(a) => kl(a),
        Command::Gof(a) => gof(a),
        Command::Study(a) => study(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(error_kind(&e), format!("{e:#}"), 1),
    }
}
