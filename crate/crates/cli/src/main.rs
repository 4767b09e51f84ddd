//! Command-line front end: fit either model family to a contingency-table
//! CSV, run the two-route agreement checks, or refit the bundled dataset
//! and compare against its published reference values.
//!
//! Results go to standard output (human-readable or JSON), diagnostics to
//! standard error. Exit codes are documented in `--help`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use llcorr::correspondence::{CheckRecord, CorrespondencePair, DEFAULT_TOLERANCE};
use llcorr::dataset;
use llcorr::design::DesignMatrix;
use llcorr::formula::{FactorName, ModelFormula};
use llcorr::glm::{self, FitOptions, FitResult};
use llcorr::table::ContingencyTable;
use llcorr::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_MODEL: u8 = 4;
const EXIT_NUMERIC: u8 = 5;
const EXIT_CHECK: u8 = 6;

const EXIT_HELP: &str = "\
Exit codes:
  0  success; fits converged and every requested check passed
  2  command-line usage error
  3  input data error (I/O, CSV structure, bundled-data checksum)
  4  model error (formula syntax, unknown factor, ineligibility, rank)
  5  numerical failure (no convergence, estimate diverging to infinity)
  6  an agreement or reproduction check failed";

#[derive(Parser)]
#[command(
    name = "llcorr",
    version,
    about = "Fits log-linear and logistic models to contingency tables and \
             verifies that the two routes agree",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model to a contingency-table CSV
    Fit(FitArgs),
    /// Fit both routes for one table and verify their agreement
    Correspond(CorrespondArgs),
    /// Refit the bundled dataset and print both reference tables
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    /// Poisson regression on the cell counts with a log link
    Poisson,
    /// Binomial regression on outcome classes with a logit link
    Binomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Aligned tables for reading
    Human,
    /// One JSON document
    Json,
}

#[derive(Args)]
struct FitArgs {
    /// Model family
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Model formula, e.g. "AC+AD+AE+BCDEF" or "C+D+E"
    #[arg(long)]
    model: String,
    /// CSV with one column per factor plus a `count` column
    #[arg(long)]
    data: PathBuf,
    /// Binary outcome factor to group by (binomial only)
    #[arg(long)]
    outcome: Option<String>,
    /// Factors to sum out of the grouping, comma separated (binomial only)
    #[arg(long, value_delimiter = ',')]
    merge: Vec<String>,
    /// Convergence tolerance on the largest score coordinate
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap for the reweighted least-squares loop
    #[arg(long)]
    max_iter: Option<usize>,
    /// Confidence intervals cover 1 - alpha
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct CorrespondArgs {
    /// Log-linear model formula; must contain the full interaction over
    /// the non-outcome factors
    #[arg(long)]
    model: String,
    /// CSV with one column per factor plus a `count` column
    #[arg(long)]
    data: PathBuf,
    /// Binary outcome factor
    #[arg(long)]
    outcome: String,
    /// Factors to merge out of the grouped side, comma separated
    #[arg(long, value_delimiter = ',')]
    merge: Vec<String>,
    /// Agreement tolerance for the checks
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    /// Iteration cap for both fits
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Compare the refitted values against the published references and
    /// fail (exit 6) on any deviation beyond tolerance
    #[arg(long)]
    check: bool,
    /// Replace the embedded copy of the dataset with this file; it must
    /// match the frozen checksum
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(failure: &Failure) -> u8 {
    match failure {
        Failure::Usage(_) => EXIT_USAGE,
        Failure::Lib(e) => match e {
            Error::EmptyFormula | Error::InvalidAlpha { .. } => EXIT_USAGE,
            Error::InvalidFactorSpec { .. }
            | Error::LengthMismatch { .. }
            | Error::NegativeCount { .. }
            | Error::FractionalCount { .. }
            | Error::EmptyTable
            | Error::CsvSchema { .. }
            | Error::UnknownLevel { .. }
            | Error::DuplicateCell { .. }
            | Error::MissingCell { .. }
            | Error::InvalidResponse { .. }
            | Error::ChecksumMismatch { .. } => EXIT_DATA,
            Error::UnknownFactor { .. }
            | Error::DuplicateFactor { .. }
            | Error::FormulaSyntax { .. }
            | Error::InvalidFactorName { .. }
            | Error::NoOutcomeMainEffect { .. }
            | Error::OutcomeNotBinary { .. }
            | Error::RankDeficient { .. }
            | Error::LabelMismatch { .. }
            | Error::NotEligible { .. }
            | Error::DimensionMismatch { .. } => EXIT_MODEL,
            Error::NotConverged { .. }
            | Error::MleMayNotExist { .. }
            | Error::SingularSystem
            | Error::DeviancePrecondition { .. }
            | Error::InvalidFitted { .. } => EXIT_NUMERIC,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Correspond(args) => cmd_correspond(args),
        Command::Reproduce(args) => cmd_reproduce(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => emit_diagnostic(&format!("usage error: {msg}")),
                Failure::Lib(e) => emit_diagnostic(&format!("error: {e}")),
            }
            ExitCode::from(exit_code(&failure))
        }
    }
}

fn fit_options(tol: Option<f64>, max_iter: Option<usize>) -> Result<FitOptions, Failure> {
    let mut options = FitOptions::default();
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::Usage(format!(
                "--tol must be positive and finite, got {tol}"
            )));
        }
        options.score_tolerance = tol;
    }
    if let Some(max_iter) = max_iter {
        if max_iter == 0 {
            return Err(Failure::Usage("--max-iter must be at least 1".into()));
        }
        options.max_iterations = max_iter;
    }
    Ok(options)
}

fn factor_names(table: &ContingencyTable) -> Vec<FactorName> {
    table.factors().iter().map(|f| f.name().clone()).collect()
}

fn parse_names(raw: &[String]) -> Result<Vec<FactorName>, Failure> {
    raw.iter()
        .map(|s| FactorName::new(s).map_err(Failure::from))
        .collect()
}

// ---------------------------------------------------------------- fit

#[derive(Serialize)]
struct ParameterRow {
    label: String,
    estimate: f64,
    standard_error: f64,
    conf_low: f64,
    conf_high: f64,
}

#[derive(Serialize)]
struct FitDocument {
    command: &'static str,
    family: &'static str,
    model: String,
    data: String,
    outcome: Option<String>,
    merged_factors: Vec<String>,
    rows: usize,
    residual_df: usize,
    iterations: usize,
    max_score_residual: f64,
    deviance: f64,
    alpha: f64,
    parameters: Vec<ParameterRow>,
    covariance: Vec<Vec<f64>>,
}

fn parameter_rows(fit: &FitResult, alpha: f64) -> Result<Vec<ParameterRow>, Failure> {
    let intervals = fit.wald_intervals(alpha)?;
    let se = fit.standard_errors();
    Ok(fit
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| ParameterRow {
            label: label.to_string(),
            estimate: fit.estimates[j],
            standard_error: se[j],
            conf_low: intervals[j].0,
            conf_high: intervals[j].1,
        })
        .collect())
}

fn render_parameter_table(out: &mut String, rows: &[ParameterRow], alpha: f64) {
    let width = rows
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(0)
        .max("parameter".len());
    let coverage = 100.0 * (1.0 - alpha);
    let _ = writeln!(
        out,
        "{:<width$}      estimate   std.error   {coverage:.1}% interval",
        "parameter"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.8}  {:>10.5}   [{:.8}, {:.8}]",
            r.label, r.estimate, r.standard_error, r.conf_low, r.conf_high
        );
    }
}

fn cmd_fit(args: FitArgs) -> Result<u8, Failure> {
    let options = fit_options(args.tol, args.max_iter)?;
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::Usage(format!(
            "--alpha must lie strictly between 0 and 1, got {}",
            args.alpha
        )));
    }
    if args.family == FamilyArg::Poisson {
        if args.outcome.is_some() {
            return Err(Failure::Usage(
                "--outcome applies only to the binomial family".into(),
            ));
        }
        if !args.merge.is_empty() {
            return Err(Failure::Usage(
                "--merge applies only to the binomial family".into(),
            ));
        }
    }
    let table = ContingencyTable::from_csv_path_inferred(&args.data)?;

    let (fit, family, rows, outcome, merged): (FitResult, &'static str, usize, _, _) =
        match args.family {
            FamilyArg::Poisson => {
                let formula = ModelFormula::parse(&args.model, &factor_names(&table))?;
                let design = DesignMatrix::log_linear(&formula, &table)?;
                let fit = glm::fit_poisson(&design, table.counts(), &options)?;
                (fit, "poisson", table.n_cells(), None, Vec::new())
            }
            FamilyArg::Binomial => {
                let outcome_raw = args.outcome.as_deref().ok_or_else(|| {
                    Failure::Usage("--outcome is required for the binomial family".into())
                })?;
                let outcome = FactorName::new(outcome_raw)?;
                let merge = parse_names(&args.merge)?;
                let mut grouped = table.group_by_outcome(&outcome)?;
                if !merge.is_empty() {
                    grouped = grouped.merge(&merge)?;
                }
                let names: Vec<FactorName> =
                    grouped.factors().iter().map(|f| f.name().clone()).collect();
                let formula = ModelFormula::parse(&args.model, &names)?;
                let design = DesignMatrix::logistic(&formula, &grouped)?;
                let fit =
                    glm::fit_binomial(&design, grouped.trials(), grouped.successes(), &options)?;
                let classes = grouped.trials().len();
                (fit, "binomial", classes, Some(outcome), merge)
            }
        };

    let parameters = parameter_rows(&fit, args.alpha)?;
    let document = FitDocument {
        command: "fit",
        family,
        model: args.model.clone(),
        data: args.data.display().to_string(),
        outcome: outcome.as_ref().map(|o: &FactorName| o.to_string()),
        merged_factors: merged.iter().map(FactorName::to_string).collect(),
        rows,
        residual_df: rows - fit.estimates.len(),
        iterations: fit.iterations,
        max_score_residual: fit.max_score_residual,
        deviance: fit.deviance,
        alpha: args.alpha,
        parameters,
        covariance: matrix_rows(&fit.covariance),
    };

    match args.format {
        Format::Json => print_json(&document),
        Format::Human => {
            let mut out = String::new();
            let _ = writeln!(out, "family: {}", document.family);
            let _ = writeln!(out, "model: {}", document.model);
            let _ = writeln!(out, "data: {}", document.data);
            if let Some(outcome) = &document.outcome {
                let _ = writeln!(out, "outcome: {outcome}");
            }
            if !document.merged_factors.is_empty() {
                let _ = writeln!(out, "merged factors: {}", document.merged_factors.join(", "));
            }
            let row_noun = if document.outcome.is_some() {
                "classes"
            } else {
                "cells"
            };
            let _ = writeln!(
                out,
                "{row_noun}: {}   parameters: {}   residual df: {}",
                document.rows,
                document.parameters.len(),
                document.residual_df
            );
            let _ = writeln!(
                out,
                "converged after {} iterations, max |score| {:.3e}",
                document.iterations, document.max_score_residual
            );
            let _ = writeln!(out, "deviance: {:.4}", document.deviance);
            let _ = writeln!(out);
            render_parameter_table(&mut out, &document.parameters, document.alpha);
            emit(&out);
        }
    }
    Ok(0)
}

// ---------------------------------------------------------- correspond

#[derive(Serialize)]
struct CorrespondRow {
    label: String,
    implied_estimate: f64,
    implied_standard_error: f64,
    direct_estimate: f64,
    direct_standard_error: f64,
}

#[derive(Serialize)]
struct CorrespondDocument {
    command: &'static str,
    log_linear_model: String,
    logistic_model: String,
    outcome: String,
    merged_factors: Vec<String>,
    cells: usize,
    classes: usize,
    unmerged_classes: usize,
    log_linear_deviance: f64,
    logistic_deviance: f64,
    unmerged_logistic_deviance: Option<f64>,
    tolerance: f64,
    parameters: Vec<CorrespondRow>,
    checks: Vec<CheckRecord>,
    passed: bool,
}

fn cmd_correspond(args: CorrespondArgs) -> Result<u8, Failure> {
    let options = fit_options(None, args.max_iter)?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "--tol must be positive and finite, got {}",
            args.tol
        )));
    }
    let table = ContingencyTable::from_csv_path_inferred(&args.data)?;
    let outcome = FactorName::new(&args.outcome)?;
    let merge = parse_names(&args.merge)?;
    let formula = ModelFormula::parse(&args.model, &factor_names(&table))?;
    let pair = CorrespondencePair::build(&table, &formula, &outcome, &merge, &options)?;
    let report = pair.verify(args.tol);

    let implied = pair.implied_estimates();
    let implied_se = pair.implied_covariance().map_diagonal(|v| v.sqrt());
    let direct = pair.logistic_fit();
    let direct_se = direct.standard_errors();
    let parameters: Vec<CorrespondRow> = direct
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| CorrespondRow {
            label: label.to_string(),
            implied_estimate: implied[j],
            implied_standard_error: implied_se[j],
            direct_estimate: direct.estimates[j],
            direct_standard_error: direct_se[j],
        })
        .collect();

    let document = CorrespondDocument {
        command: "correspond",
        log_linear_model: pair.log_linear_formula().to_string(),
        logistic_model: pair.logistic_formula().to_string(),
        outcome: args.outcome.clone(),
        merged_factors: merge.iter().map(FactorName::to_string).collect(),
        cells: table.n_cells(),
        classes: pair.grouped().trials().len(),
        unmerged_classes: pair.grouped_unmerged().trials().len(),
        log_linear_deviance: pair.poisson_fit().deviance,
        logistic_deviance: pair.logistic_fit().deviance,
        unmerged_logistic_deviance: pair.unmerged_logistic_fit().map(|f| f.deviance),
        tolerance: args.tol,
        parameters,
        checks: report.checks.clone(),
        passed: report.passed,
    };

    match args.format {
        Format::Json => print_json(&document),
        Format::Human => {
            let mut out = String::new();
            let _ = writeln!(out, "log-linear model: {}", document.log_linear_model);
            let _ = writeln!(
                out,
                "implied logistic model: {} (outcome {})",
                document.logistic_model, document.outcome
            );
            if document.merged_factors.is_empty() {
                let _ = writeln!(
                    out,
                    "cells: {}   classes: {}",
                    document.cells, document.classes
                );
            } else {
                let _ = writeln!(
                    out,
                    "merged factors: {}",
                    document.merged_factors.join(", ")
                );
                let _ = writeln!(
                    out,
                    "cells: {}   classes: {} (merged from {})",
                    document.cells, document.classes, document.unmerged_classes
                );
            }
            let _ = write!(
                out,
                "deviance: log-linear {:.4}, logistic {:.4}",
                document.log_linear_deviance, document.logistic_deviance
            );
            if let Some(d) = document.unmerged_logistic_deviance {
                let _ = write!(out, ", logistic before merging {d:.4}");
            }
            let _ = writeln!(out);
            let _ = writeln!(out);

            let width = document
                .parameters
                .iter()
                .map(|r| r.label.len())
                .max()
                .unwrap_or(0)
                .max("parameter".len());
            let _ = writeln!(
                out,
                "{:<width$}   implied est.   (std.err.)    direct est.   (std.err.)",
                "parameter"
            );
            for r in &document.parameters {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>12.8}  ({:>10.5})  {:>12.8}  ({:>10.5})",
                    r.label,
                    r.implied_estimate,
                    r.implied_standard_error,
                    r.direct_estimate,
                    r.direct_standard_error
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "checks (tolerance {:.1e}):", document.tolerance);
            for check in &document.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(
                    out,
                    "  {status}  {:<26} {:>10.3e}   {}",
                    check.name, check.discrepancy, check.detail
                );
            }
            let _ = writeln!(
                out,
                "overall: {}",
                if document.passed { "PASS" } else { "FAIL" }
            );
            emit(&out);
        }
    }
    Ok(if report.passed { 0 } else { EXIT_CHECK })
}

// ----------------------------------------------------------- reproduce

#[derive(Serialize)]
struct ReproduceRow {
    log_linear_label: String,
    logistic_label: String,
    estimate: f64,
    standard_error: f64,
}

#[derive(Serialize)]
struct ReferenceCheck {
    name: String,
    deviation: f64,
    tolerance: f64,
    passed: bool,
}

impl ReferenceCheck {
    fn new(name: &str, deviation: f64, tolerance: f64) -> Self {
        ReferenceCheck {
            name: name.into(),
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct ReproduceTable {
    classes: usize,
    residual_df: usize,
    log_linear_deviance: Option<f64>,
    logistic_deviance: f64,
    rows: Vec<ReproduceRow>,
}

#[derive(Serialize)]
struct ReproduceDocument {
    command: &'static str,
    data: String,
    model: String,
    outcome: String,
    merged_factors: Vec<String>,
    full_grouping: ReproduceTable,
    merged_grouping: ReproduceTable,
    checks: Option<Vec<ReferenceCheck>>,
    passed: Option<bool>,
}

fn reproduce_rows(pair: &CorrespondencePair) -> Vec<ReproduceRow> {
    let fit = pair.logistic_fit();
    let se = fit.standard_errors();
    let lambda_labels = &pair.poisson_fit().labels;
    pair.incidence()
        .selected()
        .iter()
        .enumerate()
        .map(|(j, &lambda_col)| ReproduceRow {
            log_linear_label: lambda_labels[lambda_col].to_string(),
            logistic_label: fit.labels[j].to_string(),
            estimate: fit.estimates[j],
            standard_error: se[j],
        })
        .collect()
}

fn max_reference_deviation(values: &[f64], reference: &[f64]) -> f64 {
    values
        .iter()
        .zip(reference)
        .map(|(v, r)| (v - r).abs())
        .fold(0.0, f64::max)
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<u8, Failure> {
    let (table, data_label) = match &args.data {
        None => (dataset::load_table()?, "bundled".to_string()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Lib(Error::CsvSchema {
                    detail: format!("cannot read {}: {e}", path.display()),
                })
            })?;
            (dataset::load_table_from(&text)?, path.display().to_string())
        }
    };
    let options = FitOptions::default();
    let formula = dataset::model_formula();
    let outcome = dataset::outcome();
    let obsolete = dataset::obsolete_factors();
    let full = CorrespondencePair::build(&table, &formula, &outcome, &[], &options)?;
    let merged = CorrespondencePair::build(&table, &formula, &outcome, &obsolete, &options)?;

    let full_grouping = ReproduceTable {
        classes: full.grouped().trials().len(),
        residual_df: full.grouped().trials().len() - full.logistic_fit().estimates.len(),
        log_linear_deviance: Some(full.poisson_fit().deviance),
        logistic_deviance: full.logistic_fit().deviance,
        rows: reproduce_rows(&full),
    };
    let merged_grouping = ReproduceTable {
        classes: merged.grouped().trials().len(),
        residual_df: merged.grouped().trials().len() - merged.logistic_fit().estimates.len(),
        log_linear_deviance: None,
        logistic_deviance: merged.logistic_fit().deviance,
        rows: reproduce_rows(&merged),
    };

    let checks = args.check.then(|| reference_checks(&full, &merged));
    let passed = checks.as_ref().map(|c| c.iter().all(|r| r.passed));

    let document = ReproduceDocument {
        command: "reproduce",
        data: data_label,
        model: formula.to_string(),
        outcome: outcome.to_string(),
        merged_factors: obsolete.iter().map(FactorName::to_string).collect(),
        full_grouping,
        merged_grouping,
        checks,
        passed,
    };

    match args.format {
        Format::Json => print_json(&document),
        Format::Human => emit(&render_reproduce(&document)),
    }
    Ok(match document.passed {
        Some(false) => EXIT_CHECK,
        _ => 0,
    })
}

fn reference_checks(full: &CorrespondencePair, merged: &CorrespondencePair) -> Vec<ReferenceCheck> {
    let implied = full.implied_estimates();
    let implied_se = full.implied_covariance().map_diagonal(|v| v.sqrt());
    let direct = full.logistic_fit();
    let direct_se = direct.standard_errors();
    let merged_fit = merged.logistic_fit();
    let merged_direct_se = merged_fit.standard_errors();

    let est_ref = &dataset::REFERENCE_ESTIMATES;
    let se_ref = &dataset::REFERENCE_STANDARD_ERRORS;
    let full_est = max_reference_deviation(implied.as_slice(), est_ref)
        .max(max_reference_deviation(direct.estimates.as_slice(), est_ref));
    let full_se = max_reference_deviation(implied_se.as_slice(), se_ref)
        .max(max_reference_deviation(direct_se.as_slice(), se_ref));
    let full_dev = (full.poisson_fit().deviance - dataset::REFERENCE_DEVIANCE_32_CLASS)
        .abs()
        .max((direct.deviance - dataset::REFERENCE_DEVIANCE_32_CLASS).abs());
    let merged_est = max_reference_deviation(merged_fit.estimates.as_slice(), est_ref);
    let merged_se = max_reference_deviation(merged_direct_se.as_slice(), se_ref);
    let merged_dev = (merged_fit.deviance - dataset::REFERENCE_DEVIANCE_8_CLASS).abs();
    let routes = (&implied - &direct.estimates)
        .amax()
        .max((&implied_se - &direct_se).amax())
        .max((merged.implied_estimates() - &merged_fit.estimates).amax())
        .max(
            (merged.implied_covariance().map_diagonal(|v| v.sqrt()) - &merged_direct_se).amax(),
        );

    vec![
        ReferenceCheck::new("full_estimates", full_est, dataset::ESTIMATE_TOLERANCE),
        ReferenceCheck::new(
            "full_standard_errors",
            full_se,
            dataset::STANDARD_ERROR_TOLERANCE,
        ),
        ReferenceCheck::new("full_deviance", full_dev, dataset::DEVIANCE_TOLERANCE),
        ReferenceCheck::new("merged_estimates", merged_est, dataset::ESTIMATE_TOLERANCE),
        ReferenceCheck::new(
            "merged_standard_errors",
            merged_se,
            dataset::STANDARD_ERROR_TOLERANCE,
        ),
        ReferenceCheck::new("merged_deviance", merged_dev, dataset::DEVIANCE_TOLERANCE),
        ReferenceCheck::new("route_agreement", routes, DEFAULT_TOLERANCE),
    ]
}

fn render_reproduce(document: &ReproduceDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reproduction of the bundled coronary risk-factor analysis ({} data)",
        document.data
    );
    let _ = writeln!(
        out,
        "model: {} with outcome {}",
        document.model, document.outcome
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "full grouping ({} outcome classes):",
        document.full_grouping.classes
    );
    if let Some(d) = document.full_grouping.log_linear_deviance {
        let _ = writeln!(
            out,
            "  deviance: log-linear {:.4}, logistic {:.4} (residual df {})",
            d, document.full_grouping.logistic_deviance, document.full_grouping.residual_df
        );
    }
    render_reproduce_rows(&mut out, &document.full_grouping.rows);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "merged grouping (factors {} summed out, {} outcome classes):",
        document.merged_factors.join(", "),
        document.merged_grouping.classes
    );
    let _ = writeln!(
        out,
        "  deviance: logistic {:.4} (residual df {})",
        document.merged_grouping.logistic_deviance, document.merged_grouping.residual_df
    );
    render_reproduce_rows(&mut out, &document.merged_grouping.rows);
    if let Some(checks) = &document.checks {
        let _ = writeln!(out);
        let _ = writeln!(out, "reference checks:");
        for check in checks {
            let status = if check.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "  {status}  {:<24} deviation {:>10.3e}  (tolerance {:.1e})",
                check.name, check.deviation, check.tolerance
            );
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if document.passed == Some(true) {
                "PASS"
            } else {
                "FAIL"
            }
        );
    }
    out
}

fn render_reproduce_rows(out: &mut String, rows: &[ReproduceRow]) {
    let width = rows
        .iter()
        .map(|r| r.log_linear_label.len() + r.logistic_label.len() + 3)
        .max()
        .unwrap_or(0)
        .max("parameter".len());
    let _ = writeln!(out, "  {:<width$}      estimate   std.error", "parameter");
    for r in rows {
        let label = format!("{} ({})", r.log_linear_label, r.logistic_label);
        let _ = writeln!(
            out,
            "  {label:<width$}  {:>12.8}  {:>10.5}",
            r.estimate, r.standard_error
        );
    }
}

// ------------------------------------------------------------- shared

fn matrix_rows(m: &llcorr::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn print_json<T: Serialize>(document: &T) {
    let mut text = serde_json::to_string_pretty(document).expect("document serializes");
    text.push('\n');
    emit(&text);
}

/// Writes to standard output, treating a closed pipe as a normal end of
/// the conversation rather than an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    if stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
        .is_err()
    {
        std::process::exit(0);
    }
}

fn emit_diagnostic(text: &str) {
    use std::io::Write;
    let mut stderr = std::io::stderr().lock();
    let _ = writeln!(stderr, "{text}");
}
