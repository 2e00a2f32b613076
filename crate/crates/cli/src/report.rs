//! Machine-readable reports and the human summary.

use std::fmt::Write as _;
use std::time::Duration;

use debias::EstimateReport;
use serde::Serialize;

use crate::config::{ExperimentConfig, LawConfig, ModelConfig, OutputFormat};
use crate::error::CliError;
use crate::experiment::{DesignTable, Outcome};

/// One CSV row of an estimation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow<'a> {
    pub experiment: &'a str,
    pub seed: u64,
    #[serde(rename = "M")]
    pub replicates: usize,
    pub mean: f64,
    pub stderr: f64,
    pub var_y: f64,
    pub sigma2_hat_mean: Option<f64>,
    #[serde(rename = "mean_N")]
    pub mean_n: f64,
    pub mean_cost: f64,
}

impl<'a> EstimateRow<'a> {
    pub fn new(experiment: &'a str, r: &EstimateReport) -> Self {
        Self {
            experiment,
            seed: r.seed,
            replicates: r.replicates,
            mean: r.mean,
            stderr: r.stderr,
            var_y: r.var_y,
            sigma2_hat_mean: r.sigma2_hat_mean,
            mean_n: r.mean_n,
            mean_cost: r.mean_cost,
        }
    }
}

#[derive(Serialize)]
struct JsonEstimate<'a> {
    #[serde(flatten)]
    row: EstimateRow<'a>,
    failures: usize,
    law: &'a LawConfig,
    model: &'a ModelConfig,
}

#[derive(Serialize)]
struct JsonDesign<'a> {
    experiment: &'a str,
    #[serde(flatten)]
    table: &'a DesignTable,
}

/// Renders the report. Contents depend only on the configuration and seed.
pub fn render(
    cfg: &ExperimentConfig,
    outcome: &Outcome,
    format: OutputFormat,
) -> Result<String, CliError> {
    let name = cfg.experiment.name();
    match (outcome, format) {
        (Outcome::Estimate(r), OutputFormat::Csv) => csv_rows([EstimateRow::new(name, r)]),
        (Outcome::Design(t), OutputFormat::Csv) => csv_rows(&t.rows),
        (Outcome::Estimate(r), OutputFormat::Json) => json(&JsonEstimate {
            row: EstimateRow::new(name, r),
            failures: r.failures,
            law: &cfg.law,
            model: &cfg.model,
        }),
        (Outcome::Design(t), OutputFormat::Json) => json(&JsonDesign {
            experiment: name,
            table: t,
        }),
    }
}

fn csv_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(format!("csv: {e}")))
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn summary(cfg: &ExperimentConfig, outcome: &Outcome, wall: Duration) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment  {}", cfg.experiment.name());
    match outcome {
        Outcome::Estimate(r) => {
            let _ = writeln!(s, "law         {}", describe_law(&cfg.law));
            let _ = writeln!(s, "replicates  {} (seed {})", r.replicates, r.seed);
            let _ = writeln!(s, "mean        {:.8} +/- {:.3e}", r.mean, r.stderr);
            let _ = writeln!(s, "var(Y)      {:.6e}", r.var_y);
            if let Some(v) = r.sigma2_hat_mean {
                let _ = writeln!(s, "mean var^   {v:.6e}");
            }
            let _ = writeln!(s, "mean N      {:.4}", r.mean_n);
            let _ = writeln!(s, "mean cost   {:.4}", r.mean_cost);
            if r.failures > 0 {
                let _ = writeln!(s, "failures    {}", r.failures);
            }
        }
        Outcome::Design(t) => {
            let _ = writeln!(
                s,
                "budgets     E[N] = {}, E[2^N] = {}",
                t.budget_levels, t.budget_evals
            );
            let _ = writeln!(
                s,
                "{:>6} {:>10} {:>6} {:>8} {:>12} {:>6} {:>10} {:>12}",
                "r", "inflation", "s", "q", "variance", "s_c", "q_c", "objective"
            );
            for row in &t.rows {
                let _ = writeln!(
                    s,
                    "{:>6.2} {:>10.4} {:>6} {:>8} {:>12} {:>6} {:>10} {:>12}",
                    row.r,
                    row.inflation,
                    opt(row.geo_shift, |v| v.to_string()),
                    opt(row.geo_q_rounded, |v| format!("{v:.4}")),
                    opt(row.geo_variance_rounded, |v| format!("{v:.4e}")),
                    opt(row.cost_shift, |v| v.to_string()),
                    opt(row.cost_q, |v| format!("{v:.6}")),
                    opt(row.cost_objective, |v| format!("{v:.4e}")),
                );
            }
        }
    }
    let _ = writeln!(s, "wall time   {:.3}s", wall.as_secs_f64());
    s
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| "-".to_string(), f)
}

fn describe_law(law: &LawConfig) -> String {
    match *law {
        LawConfig::Geometric { p, shift } => format!("geometric p = {p}, shift = {shift}"),
        LawConfig::Adaptive {
            decay,
            epsilon,
            n_max,
            shift,
        } => {
            format!(
                "adaptive decay = {decay}, epsilon = {epsilon}, guard = {n_max}, shift = {shift}"
            )
        }
    }
}
