use serde::{Deserialize, Serialize};

use super::black_scholes::bs_call;
use super::cir::CirTransition;
use crate::error::{Error, Result};
use crate::model::{CostModel, LevelSequenceModel};
use crate::stream::Stream;

/// Finest variance grid a replicate may request (2^28 steps).
const MAX_LEVEL: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams {
    pub s0: f64,
    pub strike: f64,
    pub rate: f64,
    pub maturity: f64,
    pub rho: f64,
    /// Mean-reversion speed of the variance.
    pub kappa: f64,
    /// Long-run variance level.
    pub theta: f64,
    /// Volatility of variance.
    pub sigma_v: f64,
    pub v0: f64,
}

impl HestonParams {
    pub fn validate(self) -> Result<Self> {
        let positive = [
            ("s0", self.s0),
            ("strike", self.strike),
            ("maturity", self.maturity),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("sigma_v", self.sigma_v),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("{v} must be positive and finite"),
                ));
            }
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return Err(Error::invalid(
                "v0",
                format!("initial variance {} must be non-negative", self.v0),
            ));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::invalid(
                "rho",
                format!("correlation {} not in [-1, 1]", self.rho),
            ));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("rate", "interest rate must be finite"));
        }
        Ok(self)
    }

    /// `2 kappa theta > sigma_v^2`: the variance process stays off zero.
    /// Informational only.
    pub fn feller_ok(&self) -> bool {
        2.0 * self.kappa * self.theta > self.sigma_v * self.sigma_v
    }

    /// Long-dated case; reference price about 34.9998.
    pub fn broadie_kaya_1() -> Self {
        Self {
            s0: 100.0,
            strike: 100.0,
            rate: 0.05,
            maturity: 5.0,
            rho: -0.3,
            kappa: 2.0,
            theta: 0.09,
            sigma_v: 1.0,
            v0: 0.09,
        }
    }

    /// One-year case; reference price about 6.8061.
    pub fn broadie_kaya_2() -> Self {
        Self {
            s0: 100.0,
            strike: 100.0,
            rate: 0.0319,
            maturity: 1.0,
            rho: -0.7,
            kappa: 6.21,
            theta: 0.019,
            sigma_v: 0.61,
            v0: 0.010201,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "broadie_kaya_1" => Some(Self::broadie_kaya_1()),
            "broadie_kaya_2" => Some(Self::broadie_kaya_2()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 2] = ["broadie_kaya_1", "broadie_kaya_2"];
}

/// Variance values `V(k T / 2^n)`, `k = 0..=2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct VariancePath {
    pub level: usize,
    pub maturity: f64,
    pub values: Vec<f64>,
}

impl VariancePath {
    pub fn new(level: usize, maturity: f64, values: Vec<f64>) -> Result<Self> {
        if level > MAX_LEVEL || values.len() != (1usize << level) + 1 {
            return Err(Error::invalid(
                "values",
                format!("{} values do not form a level-{level} grid", values.len()),
            ));
        }
        if !(maturity >= 0.0) {
            return Err(Error::invalid(
                "maturity",
                format!("{maturity} must be non-negative"),
            ));
        }
        Ok(Self {
            level,
            maturity,
            values,
        })
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Exact simulation of the variance on the uniform grid with `2^n` steps.
pub fn simulate_variance_grid(
    p: &HestonParams,
    n: usize,
    stream: &mut Stream,
) -> Result<VariancePath> {
    if n > MAX_LEVEL {
        return Err(Error::level(
            n,
            format!("variance grid finer than 2^{MAX_LEVEL} steps"),
        ));
    }
    let steps = 1usize << n;
    let transition = CirTransition::new(p.kappa, p.theta, p.sigma_v, p.maturity / steps as f64)?;
    let mut values = Vec::with_capacity(steps + 1);
    let mut v = p.v0;
    values.push(v);
    for _ in 0..steps {
        v = transition.sample(v, stream);
        values.push(v);
    }
    Ok(VariancePath {
        level: n,
        maturity: p.maturity,
        values,
    })
}

/// Trapezoid approximations `I_s, ..., I_N` of the integrated variance,
/// `I_j` using every `2^(N-j)`-th point of the level-`N` path.
pub fn nested_trapezoid_integrals(path: &VariancePath, s: usize) -> Result<Vec<f64>> {
    if s > path.level {
        return Err(Error::invalid(
            "s",
            format!("coarsest level {s} above path level {}", path.level),
        ));
    }
    let ends = 0.5 * (path.values[0] + path.terminal());
    Ok((s..=path.level)
        .map(|j| {
            let stride = 1usize << (path.level - j);
            let h = path.maturity / (1usize << j) as f64;
            let interior: f64 = path.values[stride..path.values.len() - 1]
                .iter()
                .step_by(stride)
                .sum();
            h * (ends + interior)
        })
        .collect())
}

/// `ln xi = -rho^2 I / 2 + rho / sigma_v (V_T - V_0 + kappa I - kappa theta T)`.
pub fn log_xi_factor(v_t: f64, integral: f64, p: &HestonParams) -> f64 {
    -0.5 * p.rho * p.rho * integral
        + p.rho / p.sigma_v * (v_t - p.v0 + p.kappa * integral - p.kappa * p.theta * p.maturity)
}

pub fn xi_factor(v_t: f64, integral: f64, p: &HestonParams) -> Result<f64> {
    if !(integral >= 0.0) {
        return Err(Error::invalid(
            "integral",
            format!("integrated variance {integral} must be non-negative"),
        ));
    }
    let xi = log_xi_factor(v_t, integral, p).exp();
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::InvalidState(format!(
            "xi factor overflowed for V_T = {v_t}, I = {integral}"
        )));
    }
    Ok(xi)
}

/// Call price given the terminal variance and integrated variance:
/// `BS(s0 xi, K, r, T, sqrt(I / T) sqrt(1 - rho^2))`.
pub fn conditional_price(v_t: f64, integral: f64, p: &HestonParams) -> Result<f64> {
    if !(p.maturity > 0.0) {
        return Err(Error::invalid("maturity", "conditional price needs T > 0"));
    }
    if !(integral >= 0.0) {
        return Err(Error::invalid(
            "integral",
            format!("integrated variance {integral} must be non-negative"),
        ));
    }
    // Spot assembled in log space so that only a genuinely unrepresentable spot fails.
    let spot = (p.s0.ln() + log_xi_factor(v_t, integral, p)).exp();
    if !(spot.is_finite() && spot > 0.0) {
        return Err(Error::InvalidState(format!(
            "conditional spot not representable for V_T = {v_t}, I = {integral}"
        )));
    }
    let vol = (integral / p.maturity).sqrt() * (1.0 - p.rho * p.rho).sqrt();
    bs_call(spot, p.strike, p.rate, p.maturity, vol)
}

/// Heston call price as a nested-grid level sequence: `X_n` is the
/// conditional price with `I(T)` replaced by its `2^n`-interval trapezoid
/// approximation on one exactly simulated variance path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonModel {
    params: HestonParams,
}

impl HestonModel {
    pub fn new(params: HestonParams) -> Result<Self> {
        Ok(Self {
            params: params.validate()?,
        })
    }

    pub fn params(&self) -> &HestonParams {
        &self.params
    }
}

pub fn heston_level_model(p: HestonParams) -> Result<HestonModel> {
    HestonModel::new(p)
}

impl LevelSequenceModel for HestonModel {
    fn cost_model(&self) -> CostModel {
        CostModel::Exponential
    }

    /// The path is simulated once at the top level; coarser levels use
    /// sub-grids of it, each of which is itself an exact grid sample.
    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        if to < from {
            return Err(Error::invalid(
                "to",
                format!("top level {to} below starting level {from}"),
            ));
        }
        let path = simulate_variance_grid(&self.params, to, stream)?;
        let v_t = path.terminal();
        nested_trapezoid_integrals(&path, from)?
            .into_iter()
            .enumerate()
            .map(|(k, integral)| {
                conditional_price(v_t, integral, &self.params)
                    .map_err(|e| Error::level(from + k, e.to_string()))
            })
            .collect()
    }
}
