use serde::{Deserialize, Serialize};

use super::ScalarFn;
use crate::error::{Error, Result};
use crate::law::ShiftedGeometric;
use crate::model::{CostModel, LevelSequenceModel, LevelWalker};
use crate::stream::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

impl QuadratureRule {
    pub fn min_level(self) -> usize {
        match self {
            QuadratureRule::Trapezoid => 0,
            // Needs an even number of intervals.
            QuadratureRule::Simpson => 1,
        }
    }
}

/// Composite rule on the uniform grid with `2^n` intervals over `[lo, hi]`.
/// Level `n + 1` reuses every evaluation of level `n`.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureModel<F = ScalarFn> {
    f: F,
    lo: f64,
    hi: f64,
    rule: QuadratureRule,
}

impl<F: Fn(f64) -> f64> QuadratureModel<F> {
    pub fn new(f: F, lo: f64, hi: f64, rule: QuadratureRule) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "lo",
                format!("[{lo}, {hi}] is not a finite non-empty interval"),
            ));
        }
        Ok(Self { f, lo, hi, rule })
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    fn point(&self, index: usize, level: usize) -> f64 {
        // index / 2^level is exact, so a point has the same coordinate on every grid containing it.
        self.lo + (self.hi - self.lo) * (index as f64 / pow2(level))
    }
}

fn pow2(n: usize) -> f64 {
    2f64.powi(n as i32)
}

/// Function values on the current grid, in grid order.
#[derive(Debug, Clone)]
pub struct QuadratureGrid<'a, F = ScalarFn> {
    model: &'a QuadratureModel<F>,
    level: usize,
    values: Vec<f64>,
    evaluations: usize,
}

impl<'a, F: Fn(f64) -> f64> QuadratureGrid<'a, F> {
    /// Evaluates the integrand directly on the level-`level` grid.
    pub fn new(model: &'a QuadratureModel<F>, level: usize) -> Result<Self> {
        if level < model.rule.min_level() {
            return Err(Error::level(
                level,
                format!(
                    "{:?} rule needs level >= {}",
                    model.rule,
                    model.rule.min_level()
                ),
            ));
        }
        if level > 40 {
            return Err(Error::level(level, "grid too fine"));
        }
        let points = (1usize << level) + 1;
        let values: Vec<f64> = (0..points)
            .map(|k| (model.f)(model.point(k, level)))
            .collect();
        Ok(Self {
            model,
            level,
            evaluations: values.len(),
            values,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Integrand evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Halves the spacing, evaluating only the new midpoints.
    pub fn refine(&mut self) -> Result<()> {
        if self.level >= 40 {
            return Err(Error::level(self.level + 1, "grid too fine"));
        }
        let next = self.level + 1;
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for (k, &v) in self.values.iter().enumerate() {
            if k > 0 {
                values.push((self.model.f)(self.model.point(2 * k - 1, next)));
            }
            values.push(v);
        }
        self.evaluations += self.values.len() - 1;
        self.values = values;
        self.level = next;
        Ok(())
    }

    pub fn estimate(&self) -> f64 {
        let h = (self.model.hi - self.model.lo) / pow2(self.level);
        let last = self.values.len() - 1;
        match self.model.rule {
            QuadratureRule::Trapezoid => {
                let sum = self.values.iter().enumerate().fold(0.0, |acc, (k, &v)| {
                    acc + if k == 0 || k == last { 0.5 * v } else { v }
                });
                h * sum
            }
            QuadratureRule::Simpson => {
                let sum = self.values.iter().enumerate().fold(0.0, |acc, (k, &v)| {
                    let w = if k == 0 || k == last {
                        1.0
                    } else if k % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    acc + w * v
                });
                h / 3.0 * sum
            }
        }
    }
}

/// `I_n`: the composite rule on `2^n` intervals.
pub fn quadrature_level<F: Fn(f64) -> f64>(m: &QuadratureModel<F>, n: usize) -> Result<f64> {
    QuadratureGrid::new(m, n).map(|g| g.estimate())
}

struct QuadratureWalker<'a, F> {
    grid: QuadratureGrid<'a, F>,
}

impl<F: Fn(f64) -> f64> LevelWalker for QuadratureWalker<'_, F> {
    fn level(&self) -> usize {
        self.grid.level()
    }

    fn value(&self) -> f64 {
        self.grid.estimate()
    }

    fn advance(&mut self, _stream: &mut Stream) -> Result<f64> {
        self.grid.refine()?;
        Ok(self.grid.estimate())
    }
}

impl<F: Fn(f64) -> f64 + Send + Sync> LevelSequenceModel for QuadratureModel<F> {
    fn min_level(&self) -> usize {
        self.rule.min_level()
    }

    fn cost_model(&self) -> CostModel {
        CostModel::Exponential
    }

    fn levels(&self, _stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        if to < from {
            return Err(Error::invalid(
                "to",
                format!("top level {to} below starting level {from}"),
            ));
        }
        let mut grid = QuadratureGrid::new(self, from)?;
        let mut values = vec![grid.estimate()];
        for _ in from..to {
            grid.refine()?;
            values.push(grid.estimate());
        }
        Ok(values)
    }

    fn walker<'a>(
        &'a self,
        _stream: &mut Stream,
        from: usize,
    ) -> Result<Box<dyn LevelWalker + 'a>> {
        Ok(Box::new(QuadratureWalker {
            grid: QuadratureGrid::new(self, from)?,
        }))
    }
}

/// `E[2^N + 1]` under a shifted geometric law: `1 + 2^s p / (2p - 1)`.
pub fn expected_evaluations(law: &ShiftedGeometric) -> Result<f64> {
    let p = law.p();
    if p <= 0.5 {
        return Err(Error::DivergentCost(format!(
            "E[2^N] is infinite for stopping probability {p} <= 1/2"
        )));
    }
    Ok(1.0 + pow2(law.shift()) * p / (2.0 * p - 1.0))
}

/// Variance of the crude Monte Carlo estimate `(hi - lo) mean f(U_i)` of
/// `int f` using `evals` uniform points.
pub fn crude_mc_variance(f: ScalarFn, lo: f64, hi: f64, evals: usize) -> Result<f64> {
    if evals == 0 {
        return Err(Error::invalid("evals", "need at least one evaluation"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(
            "lo",
            format!("[{lo}, {hi}] is not a finite non-empty interval"),
        ));
    }
    let integral = gauss_legendre(f, lo, hi);
    let integral_sq = gauss_legendre(|x| f(x) * f(x), lo, hi);
    Ok(((hi - lo) * integral_sq - integral * integral).max(0.0) / evals as f64)
}

/// Composite 5-point Gauss-Legendre on 1024 panels.
fn gauss_legendre(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const NODES: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683_1,
        0.0,
        0.538_469_310_105_683_1,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.236_926_885_056_189_1,
        0.478_628_670_499_366_5,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
    ];
    const PANELS: usize = 1024;
    let width = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let mid = lo + (i as f64 + 0.5) * width;
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * width * x))
                .sum::<f64>()
                * 0.5
                * width
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_pi(x: f64) -> f64 {
        (PI * x).sin()
    }

    #[test]
    fn hand_values() {
        let trap = QuadratureModel::new(sin_pi, 0.0, 1.0, QuadratureRule::Trapezoid).unwrap();
        assert!((quadrature_level(&trap, 1).unwrap() - 0.5).abs() < 1e-15);
        let simpson = QuadratureModel::new(sin_pi, 0.0, 1.0, QuadratureRule::Simpson).unwrap();
        // (4 sin(pi/4) * 2 + 2) / 12
        let expected = (8.0 * (PI / 4.0).sin() + 2.0) / 12.0;
        assert!((quadrature_level(&simpson, 2).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.6380).abs() < 1e-4);
    }

    #[test]
    fn simpson_needs_an_even_interval_count() {
        let simpson = QuadratureModel::new(sin_pi, 0.0, 1.0, QuadratureRule::Simpson).unwrap();
        assert!(matches!(
            quadrature_level(&simpson, 0),
            Err(Error::Level { level: 0, .. })
        ));
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let m =
            QuadratureModel::new(|x| 3.0 * x - 1.0, -1.0, 2.0, QuadratureRule::Trapezoid).unwrap();
        for n in 0..8 {
            assert!((quadrature_level(&m, n).unwrap() - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn expected_evaluations_examples() {
        assert_eq!(
            expected_evaluations(&ShiftedGeometric::new(0.75, 2).unwrap()).unwrap(),
            7.0
        );
        assert!(
            (expected_evaluations(&ShiftedGeometric::new(0.6, 3).unwrap()).unwrap() - 25.0).abs()
                < 1e-12
        );
        let near_one =
            expected_evaluations(&ShiftedGeometric::new(1.0 - 1e-12, 0).unwrap()).unwrap();
        assert!((near_one - 2.0).abs() < 1e-9);
        assert!(matches!(
            expected_evaluations(&ShiftedGeometric::new(0.5, 0).unwrap()),
            Err(Error::DivergentCost(_))
        ));
    }

    #[test]
    fn crude_variance_examples() {
        let v = crude_mc_variance(sin_pi, 0.0, 1.0, 7).unwrap();
        let analytic = (0.5 - (2.0 / PI).powi(2)) / 7.0;
        assert!((v - analytic).abs() < 1e-14);
        assert!((v - 0.013531).abs() < 1e-6);
        assert!(crude_mc_variance(|_| 4.0, 0.0, 1.0, 3).unwrap().abs() < 1e-15);
        assert!((crude_mc_variance(|x| x, 0.0, 1.0, 1).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }
}
