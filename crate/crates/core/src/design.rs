//! Design of truncation laws.
//!
//! For a geometric toy sequence `X_n = b + a r^n` under survival
//! `Q(n) = q^(n-s)` the estimator variance is `a^2 r^(2s) (1 - q) / (q - r^2)`.
//! The tools here pick `(q, s)` under an expected-level budget or an
//! expected-evaluation budget, and tabulate the price of unbiasedness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level means and variances of a sequence with known limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    means: Vec<f64>,
    variances: Vec<f64>,
    limit: f64,
}

impl MomentSequence {
    pub fn new(means: Vec<f64>, variances: Vec<f64>, limit: f64) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::invalid(
                "variances",
                format!("{} means but {} variances", means.len(), variances.len()),
            ));
        }
        if let Some(v) = variances.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::invalid(
                "variances",
                format!("negative or NaN variance {v}"),
            ));
        }
        Ok(Self {
            means,
            variances,
            limit,
        })
    }

    /// A deterministic sequence: all level variances zero.
    pub fn deterministic(values: Vec<f64>, limit: f64) -> Result<Self> {
        let zeros = vec![0.0; values.len()];
        Self::new(values, zeros, limit)
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// `(mu_n + mu_{n-1}) / 2` for `n >= 1`.
    pub fn midpoint(&self, n: usize) -> f64 {
        0.5 * (self.means[n] + self.means[n - 1])
    }

    /// `|2 (x_inf - xi_n) dmu_n - dsigma2_n|` for `n >= 1`, whose square
    /// root is proportional to the optimal survival probability.
    pub fn design_weight(&self, n: usize) -> f64 {
        let dmu = self.means[n] - self.means[n - 1];
        let dvar = self.variances[n] - self.variances[n - 1];
        (2.0 * (self.limit - self.midpoint(n)) * dmu - dvar).abs()
    }
}

/// Survival probabilities `Q_1, Q_2, ...` produced by the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalProfile {
    /// `survival[k] = Q(k + 1)`.
    pub survival: Vec<f64>,
    /// Normalizing constant before clamping.
    pub scale: f64,
    /// `sum Q_n` after clamping and monotone repair.
    pub achieved_budget: f64,
}

/// Minimum-variance survival profile under `sum Q_n = budget`:
/// `Q_n = c sqrt(w_n)`, then clamped to `1` and made non-increasing by a
/// running minimum. The realized sum is reported rather than re-solved.
pub fn optimal_survival_profile(m: &MomentSequence, budget: f64) -> Result<SurvivalProfile> {
    if m.len() < 2 {
        return Err(Error::invalid("moments", "need at least two levels"));
    }
    if !(budget > 0.0) {
        return Err(Error::invalid(
            "budget",
            format!("budget {budget} must be positive"),
        ));
    }
    let roots: Vec<f64> = (1..m.len()).map(|n| m.design_weight(n).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateDesign(
            "every design weight is zero (constant sequence)".into(),
        ));
    }
    let scale = budget / total;
    let mut running = 1.0f64;
    let survival: Vec<f64> = roots
        .iter()
        .map(|w| {
            running = running.min(scale * w);
            running
        })
        .collect();
    let achieved_budget = survival.iter().sum();
    Ok(SurvivalProfile {
        survival,
        scale,
        achieved_budget,
    })
}

/// Exact variance of the debiased toy sequence `b + a r^n` when
/// `Q(n) = q^(n - s)` beyond the shift `s`. `s` may be fractional.
pub fn toy_variance(a: f64, r: f64, s: f64, q: f64) -> Result<f64> {
    if !(r.abs() < 1.0 && r != 0.0) {
        return Err(Error::invalid(
            "r",
            format!("ratio {r} must satisfy 0 < |r| < 1"),
        ));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid(
            "s",
            format!("shift {s} must be non-negative"),
        ));
    }
    let r2 = r * r;
    if !(q > r2 && q < 1.0) {
        return Err(Error::InfeasibleLaw(format!(
            "need r^2 = {r2} < q < 1, got q = {q}"
        )));
    }
    Ok(a * a * r2.powf(s) * (1.0 - q) / (q - r2))
}

/// `|r|^(-2|r| / (1 - |r|))`: the factor by which debiasing inflates the
/// mean squared error relative to stopping at the expected level.
pub fn mse_inflation_factor(r: f64) -> Result<f64> {
    let r = r.abs();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid("r", format!("|r| = {r} not in (0, 1)")));
    }
    Ok(r.powf(-2.0 * r / (1.0 - r)))
}

/// Integer realization of a geometric design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundedDesign {
    pub shift: usize,
    /// Tail ratio restoring `E[N] = budget` at the integer shift.
    pub q: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricDesign {
    /// Survival tail ratio, `|r|`.
    pub q: f64,
    /// Real-valued shift `mu_N - |r| / (1 - |r|)`.
    pub s: f64,
    /// `a^2 |r|^(2s - 1)` at the real-valued shift.
    pub min_variance: f64,
    pub inflation: f64,
    pub rounded: RoundedDesign,
}

/// Tail ratio giving `E[N] = s + q / (1 - q) = budget`.
fn ratio_for_budget(budget: f64, shift: f64) -> f64 {
    let excess = budget - shift;
    excess / (1.0 + excess)
}

/// Closed-form geometric design for `X_n = b + a r^n` with `E[N] = mu_n`:
/// `q = |r|`, `s = mu_n - |r| / (1 - |r|)`.
///
/// The integer shift is chosen among the two neighbours of `s`, each with
/// the tail ratio that keeps `E[N] = mu_n`, keeping the smaller variance.
pub fn optimal_geometric_design(r: f64, mu_n: f64, a: f64) -> Result<GeometricDesign> {
    let abs_r = r.abs();
    if !(abs_r > 0.0 && abs_r < 1.0) {
        return Err(Error::invalid("r", format!("|r| = {abs_r} not in (0, 1)")));
    }
    let s = mu_n - abs_r / (1.0 - abs_r);
    if !(s >= 0.0) {
        return Err(Error::InfeasibleBudget(format!(
            "expected level {mu_n} is below |r|/(1-|r|) = {}",
            abs_r / (1.0 - abs_r)
        )));
    }
    let min_variance = a * a * abs_r.powf(2.0 * s - 1.0);
    let rounded = [s.floor(), s.ceil()]
        .into_iter()
        .filter_map(|shift| {
            let q = ratio_for_budget(mu_n, shift);
            toy_variance(a, r, shift, q)
                .ok()
                .map(|variance| RoundedDesign {
                    shift: shift as usize,
                    q,
                    variance,
                })
        })
        .min_by(|x, y| x.variance.total_cmp(&y.variance))
        .ok_or_else(|| Error::InfeasibleBudget(format!("no integer shift near {s} is feasible")))?;
    Ok(GeometricDesign {
        q: abs_r,
        s,
        min_variance,
        inflation: mse_inflation_factor(r)?,
        rounded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostDesign {
    pub shift: usize,
    pub q: f64,
    /// Variance per `a^2`, `r^(2s) c / (c - 2^s - r^2 (2c - 2^s))`.
    pub objective: f64,
}

/// Every feasible integer shift under the evaluation budget
/// `E[2^N] = 2^s (1 - q) / (1 - 2q) = c`, in increasing order of `s`.
pub fn cost_constrained_candidates(r: f64, c: f64) -> Result<Vec<CostDesign>> {
    if !(r.abs() > 0.0 && r.abs() < 1.0) {
        return Err(Error::invalid(
            "r",
            format!("|r| = {} not in (0, 1)", r.abs()),
        ));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("budget {c} must exceed 1")));
    }
    let r2 = r * r;
    let mut candidates = Vec::new();
    let mut shift = 0usize;
    loop {
        let base = 2f64.powi(shift as i32);
        if base >= c {
            break;
        }
        let q = (c - base) / (2.0 * c - base);
        if q > r2 && q < 0.5 {
            let objective = r2.powi(shift as i32) * c / (c - base - r2 * (2.0 * c - base));
            candidates.push(CostDesign {
                shift,
                q,
                objective,
            });
        }
        shift += 1;
    }
    Ok(candidates)
}

/// Exhaustive search over the integer shift for the evaluation-budget design.
pub fn cost_constrained_design(r: f64, c: f64) -> Result<CostDesign> {
    cost_constrained_candidates(r, c)?
        .into_iter()
        .min_by(|x, y| x.objective.total_cmp(&y.objective))
        .ok_or_else(|| {
            Error::InfeasibleBudget(format!(
                "no shift satisfies r^2 < q < 1/2 for r = {r}, c = {c}"
            ))
        })
}
