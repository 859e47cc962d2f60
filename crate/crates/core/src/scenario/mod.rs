//! Scenario files, end-to-end runs and their CSV outputs.
//!
//! Every run computes all of its results before writing anything, so a
//! failed solve leaves no partial output behind.

mod config;

pub use config::{ReportConfig, ScenarioConfig, TimelineConfig};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::econ::ModelParams;
use crate::error::{Error, Result};
use crate::format::sig;
use crate::term_structure::{build_rate_table, RateTable};
use crate::timeline::{annualize, fit_to_anchors, read_anchors, write_distribution, FitReport, FitSettings};
use crate::transition::{solve_spine_with, PremiumRule, SpinePath};

/// Significant digits in CSV outputs.
pub const CSV_DIGITS: usize = 12;

pub const SPINE_HEADER: &str = "year,k_hat,c_hat,y_hat,w_hat,rental,rate_1y,rate_30y,savings,wedge,hazard";
pub const BRANCH_HEADER: &str = "arrival_year,offset,k_hat,c_hat,rental";
pub const SUMMARY_HEADER: &str =
    "source_label,lambda,rate_1y_year1,rate_30y_year1,rental_year1,savings_year1,wedge_year1";
pub const TABLE_HEADER: &str = "source_label,lambda,rate_1y_year1,rate_30y_year1";

/// A solved scenario at one `lambda`.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub source_label: String,
    pub params: ModelParams,
    pub spine: SpinePath,
    pub table: Vec<RateTable>,
}

fn num(x: f64) -> String {
    sig(x, CSV_DIGITS)
}

/// Solves `config` at `params` (usually `config.model` with some `lambda`).
pub fn solve_scenario(
    config: &ScenarioConfig,
    params: &ModelParams,
    warm_start: Option<&SpinePath>,
) -> Result<SolveOutput> {
    let beliefs = config.beliefs()?;
    let spine = solve_spine_with(params, &beliefs, &config.solver, PremiumRule::Strategic, warm_start)?;
    let table = build_rate_table(&spine, &beliefs, params, config.report.horizon)?;
    Ok(SolveOutput {
        source_label: beliefs.source_label().to_string(),
        params: *params,
        spine,
        table,
    })
}

pub fn spine_csv(table: &[RateTable]) -> String {
    let mut out = format!("{SPINE_HEADER}\n");
    for r in table {
        let fields = [
            r.k_hat, r.c_hat, r.y_hat, r.w_hat, r.rental, r.rate_1y, r.rate_30y, r.savings, r.wedge, r.hazard,
        ];
        let _ = write!(out, "{}", r.year);
        for f in fields {
            let _ = write!(out, ",{}", num(f));
        }
        out.push('\n');
    }
    out
}

pub fn branches_csv(spine: &SpinePath) -> String {
    let mut out = format!("{BRANCH_HEADER}\n");
    for b in &spine.branches {
        for j in 0..b.k_hat.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                b.arrival_year,
                j,
                num(b.k_hat[j]),
                num(b.c_hat[j]),
                num(b.r_k[j])
            );
        }
    }
    out
}

pub fn summary_csv(outputs: &[SolveOutput]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for o in outputs {
        if let Some(r) = o.table.first() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                o.source_label,
                o.params.lambda,
                num(r.rate_1y),
                num(r.rate_30y),
                num(r.rental),
                num(r.savings),
                num(r.wedge)
            );
        }
    }
    out
}

pub fn table_csv(outputs: &[SolveOutput]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for o in outputs {
        if let Some(r) = o.table.first() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                o.source_label,
                o.params.lambda,
                num(r.rate_1y),
                num(r.rate_30y)
            );
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Output directory: the explicit one, else `report.output_dir`, else the working directory.
pub fn output_dir(config: &ScenarioConfig, explicit: Option<&Path>) -> PathBuf {
    match (explicit, &config.report.output_dir) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => config.resolve(p),
        (None, None) => PathBuf::from("."),
    }
}

/// Solves at `config.model` and writes `spine.csv`, `branches.csv` and `summary.csv` into `out_dir`.
pub fn run_solve(config: &ScenarioConfig, out_dir: &Path) -> Result<SolveOutput> {
    let output = solve_scenario(config, &config.model, None)?;
    prepare_dir(out_dir)?;
    write_file(&out_dir.join("spine.csv"), &spine_csv(&output.table))?;
    write_file(&out_dir.join("branches.csv"), &branches_csv(&output.spine))?;
    write_file(
        &out_dir.join("summary.csv"),
        &summary_csv(std::slice::from_ref(&output)),
    )?;
    Ok(output)
}

/// Solves each config at each of its `report.lambdas`, in order. Each solve
/// starts from the previous one of the same config.
pub fn solve_lambda_grid(config: &ScenarioConfig) -> Result<Vec<SolveOutput>> {
    let mut outputs: Vec<SolveOutput> = Vec::with_capacity(config.report.lambdas.len());
    for &lambda in &config.report.lambdas {
        let params = config.model.with_lambda(lambda);
        let previous = outputs.last().map(|o| &o.spine);
        outputs.push(solve_scenario(config, &params, previous)?);
    }
    Ok(outputs)
}

/// Writes `table1.csv` with one row per (config, lambda).
pub fn run_table(configs: &[ScenarioConfig], out_dir: &Path) -> Result<Vec<SolveOutput>> {
    if configs.is_empty() {
        return Err(Error::config("no scenario configs given"));
    }
    let mut outputs = Vec::new();
    for cfg in configs {
        outputs.extend(solve_lambda_grid(cfg)?);
    }
    prepare_dir(out_dir)?;
    write_file(&out_dir.join("table1.csv"), &table_csv(&outputs))?;
    Ok(outputs)
}

#[derive(Serialize)]
struct FitSummary<'a> {
    loss: f64,
    flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<&'a str>,
    n_support: &'a [u32],
    n_weights: &'a [f64],
    a: f64,
    b: f64,
    months_per_year: u32,
    horizon_years: u32,
    anchors: Vec<AnchorError>,
}

#[derive(Serialize)]
struct AnchorError {
    year: u32,
    target: f64,
    fitted: f64,
    error: f64,
}

/// Path of the fit report written next to a fitted distribution file.
pub fn fit_report_path(distribution_path: &Path) -> PathBuf {
    distribution_path.with_extension("fit.toml")
}

/// Fits anchors, then writes the distribution to `out` and the fit report beside it.
pub fn run_fit(anchors_path: &Path, settings: &FitSettings, out: &Path) -> Result<FitReport> {
    let anchors = read_anchors(anchors_path)?;
    let report = fit_to_anchors(&anchors, settings)?;
    let dist = annualize(&report.spec)?;
    let summary = FitSummary {
        loss: report.loss,
        flagged: report.flagged,
        warning: report.warning.as_deref(),
        n_support: &report.spec.n_support,
        n_weights: &report.spec.n_weights,
        a: report.spec.a,
        b: report.spec.b,
        months_per_year: report.spec.months_per_year,
        horizon_years: report.spec.horizon_years,
        anchors: report
            .per_anchor
            .iter()
            .map(|(a, fitted)| AnchorError {
                year: a.year,
                target: a.cumulative,
                fitted: *fitted,
                error: fitted - a.cumulative,
            })
            .collect(),
    };
    let text = toml::to_string(&summary).map_err(|e| Error::config(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare_dir(dir)?;
    }
    write_distribution(out, &dist)?;
    write_file(&fit_report_path(out), &text)?;
    Ok(report)
}
