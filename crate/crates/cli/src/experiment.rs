//! Runs a configured experiment.

use debias::design::{cost_constrained_design, mse_inflation_factor, optimal_geometric_design};
use debias::heston::heston_level_model;
use debias::sequences::{
    integrand, root_function, NewtonModel, QuadratureModel, ToyGeometricModel,
};
use debias::{AdaptiveLaw, EstimateReport, Estimator, LevelSequenceModel, TruncationLaw};
use serde::Serialize;

use crate::config::{ExperimentConfig, LawConfig, ModelConfig};
use crate::error::CliError;

/// Result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Estimate(EstimateReport),
    Design(DesignTable),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignTable {
    pub a: f64,
    pub budget_levels: f64,
    pub budget_evals: f64,
    pub rows: Vec<DesignRow>,
}

/// Designs for one value of `r`; fields are empty where a design is
/// infeasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    pub r: f64,
    pub inflation: f64,
    pub geo_q: Option<f64>,
    pub geo_s: Option<f64>,
    pub geo_min_variance: Option<f64>,
    pub geo_shift: Option<usize>,
    pub geo_q_rounded: Option<f64>,
    pub geo_variance_rounded: Option<f64>,
    pub cost_shift: Option<usize>,
    pub cost_q: Option<f64>,
    pub cost_objective: Option<f64>,
}

/// Grid of `r` values used when no single `r` is requested.
pub fn design_grid() -> Vec<f64> {
    (1..20).map(|k| f64::from(k) / 20.0).collect()
}

pub fn truncation_law(law: &LawConfig) -> Result<TruncationLaw, CliError> {
    Ok(match *law {
        LawConfig::Geometric { p, shift } => TruncationLaw::geometric(p, shift)?,
        LawConfig::Adaptive {
            decay,
            epsilon,
            n_max,
            shift,
        } => AdaptiveLaw::new(decay, epsilon, n_max, shift)?.into(),
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match &cfg.model {
        ModelConfig::Toy { a, b, r } => estimate(ToyGeometricModel::new(*b, *a, *r)?, cfg),
        ModelConfig::Quad {
            integrand: name,
            rule,
            lo,
            hi,
        } => {
            let f = integrand(name).ok_or_else(|| {
                CliError::config("integrand", format!("unknown integrand `{name}`"))
            })?;
            estimate(QuadratureModel::new(f.f, *lo, *hi, *rule)?, cfg)
        }
        ModelConfig::Root {
            function,
            target,
            lo,
            hi,
        } => {
            let h = root_function(function).ok_or_else(|| {
                CliError::config("function", format!("unknown function `{function}`"))
            })?;
            estimate(NewtonModel::new(h.h, h.dh, *target, *lo, *hi)?, cfg)
        }
        ModelConfig::Heston { params, .. } => {
            if matches!(cfg.law, LawConfig::Adaptive { .. }) {
                return Err(CliError::config(
                    "adaptive",
                    "the heston model needs its top level in advance",
                ));
            }
            estimate(heston_level_model(*params)?, cfg)
        }
        ModelConfig::Design {
            r,
            a,
            budget_levels,
            budget_evals,
        } => design(*r, *a, *budget_levels, *budget_evals).map(Outcome::Design),
    }
}

fn estimate<M: LevelSequenceModel>(model: M, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let estimator = Estimator::new(model, truncation_law(&cfg.law)?)?.with_threads(cfg.threads);
    Ok(Outcome::Estimate(estimator.run(cfg.reps, cfg.seed)?))
}

fn design(
    r: Option<f64>,
    a: f64,
    budget_levels: f64,
    budget_evals: f64,
) -> Result<DesignTable, CliError> {
    let strict = r.is_some();
    let grid = r.map_or_else(design_grid, |r| vec![r]);
    let mut rows = Vec::with_capacity(grid.len());
    for r in grid {
        let inflation = mse_inflation_factor(r).map_err(|e| CliError::from(e).with_field("r"))?;
        let geometric = optimal_geometric_design(r, budget_levels, a);
        let cost = cost_constrained_design(r, budget_evals);
        if strict {
            if let Err(e) = &geometric {
                return Err(CliError::from(e.clone()).with_field("budget_levels"));
            }
            if let Err(e) = &cost {
                return Err(CliError::from(e.clone()).with_field("budget_evals"));
            }
        }
        let geometric = geometric.ok();
        let cost = cost.ok();
        rows.push(DesignRow {
            r,
            inflation,
            geo_q: geometric.map(|g| g.q),
            geo_s: geometric.map(|g| g.s),
            geo_min_variance: geometric.map(|g| g.min_variance),
            geo_shift: geometric.map(|g| g.rounded.shift),
            geo_q_rounded: geometric.map(|g| g.rounded.q),
            geo_variance_rounded: geometric.map(|g| g.rounded.variance),
            cost_shift: cost.map(|c| c.shift),
            cost_q: cost.map(|c| c.q),
            cost_objective: cost.map(|c| c.objective),
        });
    }
    Ok(DesignTable {
        a,
        budget_levels,
        budget_evals,
        rows,
    })
}
